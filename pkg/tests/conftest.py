"""Collects one pass/fail line per acceptance criterion and prints them at the end."""

from __future__ import annotations

import contextlib

import pytest

_RESULTS: dict[int, tuple[str, str, str]] = {}


@contextlib.contextmanager
def _record(number: int, title: str):
    detail = {"text": ""}
    try:
        yield detail
    except BaseException as exc:
        _RESULTS[number] = ("FAIL", title, f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        raise
    _RESULTS[number] = ("PASS", title, detail["text"])


@pytest.fixture
def criterion():
    """``with criterion(n, title) as d: ...; d["text"] = "measured ..."``"""
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        status, title, text = _RESULTS[n]
        line = f"[{status}] criterion {n}: {title}"
        terminalreporter.write_line(line + (f" -- {text}" if text else ""))
