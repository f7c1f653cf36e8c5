#!/usr/bin/env python3
"""Replay a recorded answer log through the classification engine.

Usage: replay_record.py HIERARCHY_JSON < record.json

Reads one annotation record (the shape served by /campaigns/{id}/records) on
stdin, re-runs its answer log against the hierarchy, and prints the terminal
category id (node id, or DISCHARGED). Exits non-zero if the log does not
replay cleanly.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from differentia.hierarchy import load_hierarchy
from differentia.traversal import AnswerEntry, TraversalConfig, replay_answers


def main() -> int:
    if len(sys.argv) != 2:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    hierarchy = load_hierarchy(Path(sys.argv[1]))
    record = json.load(sys.stdin)
    entries = [AnswerEntry.from_dict(e) for e in record["answer_log"]]
    config = TraversalConfig(auto_accept_nonvisual_root=any(e.synthetic for e in entries))
    session = replay_answers(hierarchy, entries, config)
    if session.result is None:
        print("error: answer log does not reach a terminal state", file=sys.stderr)
        return 1
    print(session.result.category_key)
    return 0


if __name__ == "__main__":
    sys.exit(main())
