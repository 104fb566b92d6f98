"""Shared fixtures: the pin store and a few common psi functions."""

import json
import os
from fractions import Fraction
from pathlib import Path

import pytest

from dsextra import make_psi, normalize_psi

PIN_PATH = Path(__file__).parent / "data" / "pins.json"


def frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


class PinStore:
    """Regression pins: first run records, later runs assert exact equality.

    Values must be JSON-stable (strings, ints, bools, lists thereof);
    fractions travel as "num/den" strings.  DSEXTRA_REPIN=1 re-records
    every pin the run visits; pins not visited are left alone.
    """

    def __init__(self, path: Path):
        self.path = path
        self.repin = os.environ.get("DSEXTRA_REPIN") == "1"
        self.data = json.loads(path.read_text()) if path.exists() else {}
        self.dirty = False

    def check(self, key: str, value):
        if self.repin or key not in self.data:
            self.data[key] = value
            self.dirty = True
            return value
        assert self.data[key] == value, (
            f"pin {key!r}: recorded {self.data[key]!r}, observed {value!r} "
            f"(if the change is intended, re-record with DSEXTRA_REPIN=1)"
        )
        return value

    def flush(self):
        if self.dirty:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text(
                json.dumps(self.data, indent=2, sort_keys=True) + "\n"
            )


@pytest.fixture(scope="session")
def pins():
    store = PinStore(PIN_PATH)
    yield store
    store.flush()


@pytest.fixture(scope="session")
def psi_half_300():
    return normalize_psi(make_psi("half", 300))


@pytest.fixture(scope="session")
def psi_recip_300():
    return normalize_psi(make_psi("recip", 300))
