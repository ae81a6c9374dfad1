import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from intervalgae.discovery import PatternGroup, SectionOccurrence
from intervalgae.formats import (
    FormatError, decode_checkpoint, decode_container, decode_pgm, encode_checkpoint,
    encode_container, encode_pgm, format_run_config, format_sections, parse_run_config,
    parse_sections, read_container, read_csv, write_container, write_csv,
)
from intervalgae.gae import ModelConfig, init_params


@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, max_side=20),
                  elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_float_container_roundtrip(M):
    out, end = decode_container(encode_container(M))
    assert np.array_equal(out, M) and end == 15 + M.size * 8


@given(hnp.arrays(np.uint8, hnp.array_shapes(min_dims=2, max_dims=2, max_side=20)))
def test_byte_container_roundtrip(M):
    data = encode_container(M)
    assert data[6] == 0 and len(data) == 15 + M.size
    out, _ = decode_container(data)
    assert out.dtype == np.uint8 and np.array_equal(out, M)


def test_container_header_layout():
    data = encode_container(np.arange(6, dtype=np.float64).reshape(2, 3), "f4")
    assert data[:4] == b"TIMR" and data[4:6] == b"\x01\x00" and data[6] == 1
    assert data[7:11] == b"\x02\x00\x00\x00" and data[11:15] == b"\x03\x00\x00\x00"


@pytest.mark.parametrize("mutate, msg", [
    (lambda b: b"XXXX" + b[4:], "magic"),
    (lambda b: b[:4] + b"\x02\x00" + b[6:], "version"),
    (lambda b: b[:6] + b"\x07" + b[7:], "dtype"),
    (lambda b: b[:-1], "truncated"),
    (lambda b: b[:10], "truncated"),
])
def test_container_errors(mutate, msg):
    good = encode_container(np.ones((2, 2)))
    with pytest.raises(FormatError, match=msg):
        decode_container(mutate(good))


def test_container_refuses_bad_values(tmp_path):
    with pytest.raises(FormatError):
        encode_container(np.array([[np.nan]]))
    with pytest.raises(FormatError):
        encode_container(np.array([[300]]), "u1")
    path = tmp_path / "m.timr"
    write_container(path, np.eye(3))
    assert np.array_equal(read_container(path), np.eye(3))
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(FormatError, match="trailing"):
        read_container(path)


def test_checkpoint_roundtrip_is_exact():
    cfg = ModelConfig(input_dim=10, context_frames=2, factor_dim=7, map_dim_1=5, map_dim_2=3, shift_range=4)
    p = init_params(cfg, np.random.default_rng(0))
    q, cfg2 = decode_checkpoint(encode_checkpoint(p, cfg))
    assert cfg2 == cfg
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))
    with pytest.raises(FormatError):
        decode_checkpoint(b"nonsense")


def test_run_config_parsing():
    rc = parse_run_config("# comment\nfactor_dim=32\nlr_start=0.01\ngamma=0.7\n", {"seed": "5"})
    assert rc.model.factor_dim == 32 and rc.train.lr_start == 0.01
    assert rc.discovery.gamma == 0.7 and rc.train.seed == 5
    assert parse_run_config(format_run_config(rc)) == rc
    assert parse_run_config(audio=True).model.input_dim == 120
    with pytest.raises(FormatError, match="unknown"):
        parse_run_config("learning_rate=1")
    with pytest.raises(FormatError, match="key=value"):
        parse_run_config("factor_dim")
    with pytest.raises(ValueError):
        parse_run_config("dropout_p=1.5")


def test_pgm_roundtrip():
    M = np.array([[0.0, 0.5], [1.0, np.nan]])
    px = decode_pgm(encode_pgm(M))
    assert px.tolist() == [[0, 128], [255, 0]]
    assert decode_pgm(encode_pgm(M, invert=True))[0, 0] == 255
    with pytest.raises(FormatError):
        decode_pgm("P5\n1 1\n255\n0\n")


def test_csv_roundtrip(tmp_path):
    path = tmp_path / "r.csv"
    write_csv(path, ["a", "b"], [(1, 0.1), (2, 1 / 3)])
    rows = read_csv(path)
    assert rows[1]["a"] == "2" and float(rows[1]["b"]) == 1 / 3


groups_strategy = st.lists(
    st.lists(st.tuples(st.integers(0, 500), st.integers(1, 80)), min_size=2, max_size=4, unique=True)
    .map(lambda xs: PatternGroup(sorted({SectionOccurrence(a, a + n) for a, n in xs}))),
    max_size=5,
)


@given(groups_strategy)
def test_sections_roundtrip(groups):
    assert parse_sections(format_sections(groups)) == groups
    assert parse_sections(format_sections(groups, seconds=(22050, 1984))) == groups


def test_section_errors():
    with pytest.raises(FormatError, match="line 1"):
        parse_sections("0 10-20 30:40\n")
    assert parse_sections("# nothing\n\n") == []
