"""One PASS/FAIL line per acceptance criterion, shared with the terminal summary."""

RESULTS: list[str] = []


def record(number: int, ok: bool, detail: str) -> str:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS.append(line)
    print(line)
    return line
