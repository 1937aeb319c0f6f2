"""Collects one verdict line per acceptance criterion for the terminal summary."""
LINES = []


def record(number, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  [{number:>2}] {name}: {detail}"
    LINES.append(line)
    print(line)
    return ok
