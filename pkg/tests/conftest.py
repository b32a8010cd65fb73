import io

import pytest
from PIL import Image

from imcurator.catalog import Catalog


def image_bytes(color=(200, 30, 30), size=(64, 48), fmt="PNG"):
    buf = io.BytesIO()
    Image.new("RGB", size, color).save(buf, format=fmt)
    return buf.getvalue()


@pytest.fixture
def catalog(tmp_path):
    return Catalog(tmp_path / "catalog")
