"""Serve the synthetic oscillator over the external-model line protocol.

    python -m drocal.server

Reads requests from stdin and answers on stdout, one line each. Useful for
exercising the external-model path end to end.
"""

import sys

import numpy as np

from .errors import DrocalError
from .model import SyntheticOscillator, _fmt


def handle(model, line: str) -> str:
    tokens = line.split()
    if not tokens:
        return "ERR empty request"
    try:
        if tokens[0] == "SIM":
            da, de = int(tokens[1]), int(tokens[2])
            nums = [float(t) for t in tokens[3:]]
            if len(nums) != da + de:
                return f"ERR expected {da + de} numbers, got {len(nums)}"
            series = model.simulate(np.array(nums[:da]), np.array(nums[da:]))
            return f"OK {series.values.size} {series.dt!r} {_fmt(series.values)}"
        if tokens[0] == "REQ":
            da, de, dth = int(tokens[1]), int(tokens[2]), int(tokens[3])
            nums = [float(t) for t in tokens[4:]]
            if len(nums) != da + de + dth:
                return f"ERR expected {da + de + dth} numbers, got {len(nums)}"
            g = model.requirements(np.array(nums[:da]), np.array(nums[da : da + de]), np.array(nums[da + de :]))
            return f"OK {g.size} {_fmt(g)}"
    except (ValueError, IndexError, DrocalError) as exc:
        return "ERR " + " ".join(str(exc).split())
    return f"ERR unknown request {tokens[0]!r}"


def main():
    model = SyntheticOscillator()
    for line in sys.stdin:
        sys.stdout.write(handle(model, line) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
