import numpy as np
import pytest
from PIL import Image

from dressedq_extractor.extract import CLASS_NAMES


@pytest.fixture(scope="session")
def toy_tree(tmp_path_factory):
    """Five class folders, three decodable images each, one corrupt file.

    Pixel content is seeded so every session builds identical bytes.
    """
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    for name in CLASS_NAMES:
        class_dir = root / name
        class_dir.mkdir()
        for i in range(3):
            pixels = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
            Image.fromarray(pixels).save(class_dir / f"img_{i:02d}.png")
    # one oversized color image and one grayscale image exercise resizing
    # and channel replication
    big = rng.integers(0, 256, size=(512, 512, 3), dtype=np.uint8)
    Image.fromarray(big).save(root / CLASS_NAMES[0] / "img_00.png")
    gray = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
    Image.fromarray(gray, mode="L").save(root / CLASS_NAMES[1] / "img_01.png")
    (root / CLASS_NAMES[3] / "zz_broken.png").write_bytes(b"not an image")
    return root
