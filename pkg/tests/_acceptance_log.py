"""Collects one pass/fail line per acceptance criterion."""

LINES: dict[int, str] = {}


def record(num: int, ok: bool, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {detail}"
    LINES[num] = line
    print(line)
    return line
