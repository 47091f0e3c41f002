import pytest

from annobench.corpus import Publication

DATA_DIR = None  # resolved lazily below


@pytest.fixture
def data_dir(request):
    return request.path.parent / "data"


def make_pub(pub_id="x1", categories=None, title="A Title", abstract="An abstract.", **kwargs):
    defaults = dict(
        id=pub_id,
        source="arxiv",
        title=title,
        abstract=abstract,
        year=2020,
        categories=categories if categories is not None else ["cs.LG"],
    )
    defaults.update(kwargs)
    return Publication(**defaults)
