import pytest

from utils.errors import SetFileError
from utils.manifest import RunManifest, manifest_path, read_manifest, write_manifest
from utils.setfile import read_set, write_set


def test_written_file_reads_back_sorted(tmp_path):
    path = str(tmp_path / "sub" / "set.txt")
    write_set(path, [13, 1, 8, 2, 4], "greedy", {"n": 5})
    loaded = read_set(path)
    assert loaded.values == [1, 2, 4, 8, 13]
    assert loaded.header == {"count": 5, "method": "greedy", "params": {"n": 5}}
    assert open(path).readline().startswith('# {"count": 5')


def test_headerless_file_with_blank_lines(tmp_path):
    path = tmp_path / "set.txt"
    path.write_text("5\n\n3\n  7  \n")
    loaded = read_set(str(path))
    assert loaded.values == [5, 3, 7]
    assert loaded.header is None


def test_huge_values_survive(tmp_path):
    path = str(tmp_path / "big.txt")
    big = (1 << 400) + 1
    write_set(path, [big, 3], "infinite", {})
    assert read_set(path).values == [3, big]


@pytest.mark.parametrize("text", [
    "1\n-2\n",
    "1\n2.5\n",
    "1\n# {}\n",
    "# not json\n1\n",
    "# [1, 2]\n1\n",
    "1\n2\u00b2\n4\n",
    "1\n\u0663\n",
])
def test_malformed_files(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(SetFileError):
        read_set(str(path))


def test_missing_file(tmp_path):
    with pytest.raises(SetFileError):
        read_set(str(tmp_path / "absent.txt"))


def test_manifest_round_trip(tmp_path):
    out = str(tmp_path / "set.txt")
    manifest = RunManifest(command=["gen-finite", "--method", "greedy"], params={"n": 5})
    with manifest.timed("construct"):
        manifest.counts = {"elements": 5}
    write_manifest(out, manifest)
    loaded = read_manifest(manifest_path(out))
    assert loaded == manifest
    assert loaded.ceilings == {"congruence": 16, "trend": 64}
    assert loaded.timings["construct"] >= 0


def test_invalid_manifest(tmp_path):
    path = tmp_path / "x.manifest.json"
    path.write_text('{"params": {}}')
    with pytest.raises(SetFileError):
        read_manifest(str(path))


def test_undecodable_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_bytes(b"1\n\xff\xfe\n")
    with pytest.raises(SetFileError):
        read_set(str(path))
