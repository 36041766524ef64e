import os

import pytest

from chartforge.util import fmt_num, num_for_json, stable_id, write_atomic


@pytest.mark.parametrize("value,text", [
    (2.0, "2"),
    (2, "2"),
    (3.1400000, "3.14"),
    (0.30000000000000004, "0.3"),
    (123456.789, "123457"),
    (1234567.89, "1.23457e+06"),
    (-0.5, "-0.5"),
    (1e-7, "1e-07"),
])
def test_fmt_num(value, text):
    assert fmt_num(value) == text


def test_num_for_json_round_trips():
    assert num_for_json(0.30000000000000004) == 0.3
    assert num_for_json(2.0) == 2
    assert num_for_json(7) == 7


def test_stable_id_deterministic_and_distinct():
    assert stable_id("a", "b") == stable_id("a", "b")
    assert stable_id("a", "b") != stable_id("ab", "")
    assert len(stable_id("x")) == 12


def test_write_atomic_replaces_file(tmp_path):
    target = tmp_path / "out.txt"
    write_atomic(target, "first")
    write_atomic(target, "second")
    assert target.read_text() == "second"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_write_atomic_failure_leaves_previous_content(tmp_path, monkeypatch):
    target = tmp_path / "out.txt"
    write_atomic(target, "stable output")

    def exploding_replace(src, dst):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", exploding_replace)
    with pytest.raises(OSError):
        write_atomic(target, "partial garbage")
    monkeypatch.undo()
    assert target.read_text() == "stable output"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]
