"""
Tests for runtime settings, output storage and the number/grid helpers.
"""

import math

import pytest

from app.cqregion.config import ConfigError, load_settings, resolve_threads
from app.cqregion.storage import LocalStorage, StorageError, storage_for_output
from app.cqregion.utils import complex_to_pairs, format_number, pairs_to_complex, parse_lambda_grid


@pytest.fixture()
def clean_env(monkeypatch):
    for name in ("CQREGION_THREADS", "CQREGION_LOG_LEVEL", "CQREGION_LEMMA2_DIM", "CQREGION_MAX_TENSOR_POWER", "CQREGION_MAX_DIM"):
        monkeypatch.delenv(name, raising=False)
    return monkeypatch


class TestSettings:
    """Tests for load_settings() and resolve_threads()"""

    def test_defaults(self, clean_env):
        """An empty environment gives the documented defaults"""
        s = load_settings()
        assert s.threads == 0
        assert s.log_level == "INFO"
        assert s.lemma2_dim == "joint"
        assert s.max_tensor_power == 2
        assert s.max_dim == 64

    def test_overrides(self, clean_env):
        """Environment values override defaults and are normalized"""
        clean_env.setenv("CQREGION_THREADS", "4")
        clean_env.setenv("CQREGION_LEMMA2_DIM", "A")
        clean_env.setenv("CQREGION_LOG_LEVEL", "debug")
        s = load_settings()
        assert (s.threads, s.lemma2_dim, s.log_level) == (4, "a", "DEBUG")

    @pytest.mark.parametrize(
        "name, value",
        [
            ("CQREGION_THREADS", "x"),
            ("CQREGION_THREADS", "-1"),
            ("CQREGION_LEMMA2_DIM", "b"),
            ("CQREGION_MAX_TENSOR_POWER", "0"),
            ("CQREGION_MAX_DIM", "1"),
        ],
    )
    def test_rejects(self, clean_env, name, value):
        """Bad values raise ConfigError naming the variable"""
        clean_env.setenv(name, value)
        with pytest.raises(ConfigError) as exc:
            load_settings()
        assert name in str(exc.value)

    def test_resolve_threads(self):
        """0 means all cores, capped at 32"""
        assert resolve_threads(3) == 3
        assert 1 <= resolve_threads(0) <= 32


class TestLocalStorage:
    """Tests for LocalStorage.put_bytes()"""

    def test_put_bytes(self, tmp_path):
        """Writes land at the key and leave no temp files"""
        storage = LocalStorage(root=tmp_path)
        p = storage.put_bytes("sub/out.csv", b"a,b\n")
        assert p.read_bytes() == b"a,b\n"
        assert not [q for q in p.parent.iterdir() if q.name.endswith(".tmp")]

    def test_overwrite(self, tmp_path):
        """A second write replaces the file"""
        storage = LocalStorage(root=tmp_path)
        storage.put_bytes("out.csv", b"old")
        assert storage.put_bytes("out.csv", b"new").read_bytes() == b"new"

    @pytest.mark.parametrize("key", ["../escape.csv", "a/../../b.csv", ""])
    def test_bad_keys(self, tmp_path, key):
        """Keys escaping the root or empty keys are refused"""
        with pytest.raises(StorageError):
            LocalStorage(root=tmp_path).put_bytes(key, b"x")

    def test_storage_for_output(self, tmp_path):
        """An output path splits into its directory storage and file key"""
        storage, key = storage_for_output(tmp_path / "report.json")
        assert storage.root == tmp_path.resolve()
        assert key == "report.json"


class TestFormatNumber:
    """Tests for format_number()"""

    def test_significant_digits(self):
        """Ten significant digits, trailing zeros dropped"""
        assert format_number(1 / 3) == "0.3333333333"
        assert format_number(0.5310044064107189) == "0.5310044064"
        assert format_number(2.0) == "2"

    def test_negative_zero(self):
        """-0 prints as 0"""
        assert format_number(-0.0) == "0"

    def test_non_finite(self):
        """NaN is refused"""
        with pytest.raises(ValueError):
            format_number(math.nan)


class TestLambdaGrid:
    """Tests for parse_lambda_grid()"""

    def test_default(self):
        """default and empty mean the built-in grid"""
        assert parse_lambda_grid("default") is None
        assert parse_lambda_grid("") is None

    def test_list_sorted_unique(self):
        """Comma lists are sorted and deduplicated"""
        assert parse_lambda_grid("2, 1,2,4") == (1.0, 2.0, 4.0)

    def test_linear_range(self):
        """Narrow ranges are linear and inclusive"""
        assert parse_lambda_grid("1:2:3") == (1.0, 1.5, 2.0)

    def test_geometric_range(self):
        """Wide ranges are geometric"""
        grid = parse_lambda_grid("1:100:3")
        assert grid == pytest.approx((1.0, 10.0, 100.0))

    @pytest.mark.parametrize("text", ["0.5,2", "1:2", "1:2:0", "abc"])
    def test_invalid(self, text):
        """Malformed grids raise ValueError"""
        with pytest.raises(ValueError):
            parse_lambda_grid(text)

    @pytest.mark.parametrize("text", ["0:2:3", "-1:2:3", "0.5:2:3", "3:2:3"])
    def test_range_start_checked_before_ratio(self, text):
        """A range starting below 1 (including 0) or running backwards is a ValueError, not a division error"""
        with pytest.raises(ValueError):
            parse_lambda_grid(text)

    @pytest.mark.parametrize("text", ["nan", "inf", "1,nan", "1:inf:3", "nan:2:3"])
    def test_non_finite(self, text):
        """NaN and infinity are refused in lists and ranges"""
        with pytest.raises(ValueError):
            parse_lambda_grid(text)


def test_complex_pairs_encoding():
    """[re, im] pairs encode and decode complex matrices"""
    m = [[1 + 2j, 0], [0, -1j]]
    pairs = complex_to_pairs(m)
    assert pairs[0][0] == [1.0, 2.0]
    assert pairs[1][1] == [0.0, -1.0]
    assert (pairs_to_complex(pairs) == [[1 + 2j, 0], [0, -1j]]).all()
