"""
reporting.py — Diagnostics for the lab.

stdout belongs to result envelopes, so everything here goes to stderr.
When UIPT_LAB_LOG is set the same lines are appended to that file.

Usage (as module):
    from execution.reporting import log, warn
    warn(f"Boltzmann table for p={p} truncated, tail={tail:.2e}")
"""

from __future__ import annotations

import os
import sys


def log(msg: str) -> None:
    """Print to stderr and append to $UIPT_LAB_LOG when configured."""
    print(msg, file=sys.stderr, flush=True)
    path = os.getenv("UIPT_LAB_LOG")
    if not path:
        return
    try:
        with open(path, "a", encoding="utf-8") as f:
            f.write(msg + "\n")
    except OSError:
        pass


def ok(msg: str) -> None:
    log(f"✅ {msg}")


def warn(msg: str) -> None:
    log(f"⚠️  {msg}")


def fail(msg: str) -> None:
    log(f"❌ {msg}")
