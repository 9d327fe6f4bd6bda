"""Simulation models: boxes, uniform samplers, the synthetic oscillator and
an adapter for external models speaking a line protocol over stdin/stdout.

Wire protocol (one request line, one response line, space separated):

    SIM <dim_a> <dim_e> a... e...                -> OK <T+1> <dt> y0 ... yT
    REQ <dim_a> <dim_e> <dim_theta> a... e... theta...  -> OK <G> g1 ... gG

Any ``ERR <message>`` response aborts that evaluation.
"""

from __future__ import annotations

import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from . import constants as C
from .errors import InvalidInputError, ModelEvaluationError
from .summary import TimeSeries

_BOX_TOL = 1e-12


@dataclass(frozen=True)
class Box:
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        if lo.shape != hi.shape or lo.ndim != 1:
            raise InvalidInputError(f"box bounds must be 1-D of equal length, got {lo.shape} and {hi.shape}")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise InvalidInputError("box bounds must be finite")
        if np.any(lo > hi):
            raise InvalidInputError(f"box needs lo <= hi componentwise, got {lo} and {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape[-1] == self.dim and bool(
            np.all(x >= self.lo - _BOX_TOL) and np.all(x <= self.hi + _BOX_TOL)
        )


def sample_uniform(box: Box, n: int, seed) -> np.ndarray:
    """n i.i.d. uniform points in ``box`` as an [n, dim] matrix."""
    if n < 0:
        raise InvalidInputError(f"n must be nonnegative, got {n}")
    rng = np.random.default_rng(seed)
    return box.lo + box.width * rng.random((n, box.dim))


class SimulationModel(Protocol):
    dim_a: int
    dim_e: int
    dim_theta: int
    a_box: Box
    e_box: Box

    def simulate(self, a, e) -> TimeSeries: ...

    def requirements(self, a, e, theta) -> np.ndarray: ...


class SyntheticOscillator:
    """Two-tone stand-in model with one component in each summary band.

    y(t) = e1 sin(2 pi f1 t + 2 pi a1) + (0.3 + a2) e3 cos(2 pi f2 t)
    f1 = 0.2 + e2/4 + 0.8 a1,   f2 = 2.5 + e4/2 + 1.5 a2

    sampled at 256 points, dt = 1/30 s. The aleatory shifts in f1 and f2
    spread each peak-frequency summary over several grid bins; with fixed
    frequencies those summaries collapse to a single atom and no e can pass
    the KS sandwich. Requirements compare amplitude
    metrics against design-dependent thresholds (g >= 0 means failure):

        g1 = th0 * peak                      - th5 - th8
        g2 = th1 * e1 + th2 * (0.3 + a2) e3  - th6 - th8
        g3 = th3 * peak * (1 + th4 * a1)     - th7 - th8

    with peak = max_t |y(t)|.
    """

    name = "oscillator"
    dim_a = 2
    dim_e = 4
    dim_theta = 9
    n_requirements = 3

    def __init__(self):
        self.n_samples = C.OSCILLATOR_N_SAMPLES
        self.dt = C.OSCILLATOR_DT
        self.a_box = Box(*C.A_BOX)
        self.e_box = Box(*C.E0_BOX)
        self.theta_baseline = np.array(C.THETA_BASELINE)
        self._t = np.arange(self.n_samples) * self.dt

    def _check(self, A, e):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        e = np.asarray(e, dtype=float)
        if A.shape[1] != self.dim_a or e.shape != (self.dim_e,):
            raise InvalidInputError(f"expected a of dim {self.dim_a} and e of dim {self.dim_e}")
        if not self.e_box.contains(e):
            raise InvalidInputError(f"e = {e} lies outside E0 = [{self.e_box.lo}, {self.e_box.hi}]")
        if not all(self.a_box.contains(a) for a in A):
            raise InvalidInputError("a sample lies outside A")
        return A, e

    def simulate_batch(self, A, e) -> np.ndarray:
        A, e = self._check(A, e)
        t = self._t[None, :]
        f1 = 0.2 + e[1] / 4 + 0.8 * A[:, :1]
        f2 = 2.5 + e[3] / 2 + 1.5 * A[:, 1:2]
        tone1 = e[0] * np.sin(2 * np.pi * f1 * t + 2 * np.pi * A[:, :1])
        tone2 = (0.3 + A[:, 1:2]) * e[2] * np.cos(2 * np.pi * f2 * t)
        return tone1 + tone2

    def simulate(self, a, e) -> TimeSeries:
        return TimeSeries(self.simulate_batch(np.asarray(a, dtype=float)[None, :], e)[0], self.dt)

    def requirements_batch(self, A, e, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.dim_theta,) or not np.all(np.isfinite(theta)):
            raise InvalidInputError(f"theta must be {self.dim_theta} finite values")
        y = self.simulate_batch(A, e)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        e = np.asarray(e, dtype=float)
        peak = np.abs(y).max(axis=1)
        amp2 = (0.3 + A[:, 1]) * e[2]
        g = np.empty((A.shape[0], 3))
        g[:, 0] = theta[0] * peak - theta[5] - theta[8]
        g[:, 1] = theta[1] * e[0] + theta[2] * amp2 - theta[6] - theta[8]
        g[:, 2] = theta[3] * peak * (1 + theta[4] * A[:, 0]) - theta[7] - theta[8]
        return g

    def requirements(self, a, e, theta) -> np.ndarray:
        return self.requirements_batch(np.asarray(a, dtype=float)[None, :], e, theta)[0]


def simulate_outputs(model, A, e) -> tuple[np.ndarray, float]:
    """Run ``model`` at every row of A for one e; returns ([k, T+1], dt)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if hasattr(model, "simulate_batch"):
        return model.simulate_batch(A, e), model.dt
    series = [model.simulate(a, e) for a in A]
    lengths = {s.values.size for s in series}
    dts = {s.dt for s in series}
    if len(lengths) != 1 or len(dts) != 1:
        raise ModelEvaluationError(f"model returned inconsistent lengths {lengths} or dt {dts}")
    return np.vstack([s.values for s in series]), dts.pop()


def evaluate_requirements(model, A, e, theta) -> np.ndarray:
    """Requirement values g for every row of A; shape [k, G]."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if hasattr(model, "requirements_batch"):
        return model.requirements_batch(A, e, theta)
    rows = [np.asarray(model.requirements(a, e, theta), dtype=float) for a in A]
    if len({r.shape for r in rows}) != 1:
        raise ModelEvaluationError("model returned requirement vectors of varying length")
    return np.vstack(rows)


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


class ExternalModel:
    """Adapts a child process speaking the wire protocol to the model contract.

    The child is started lazily and restarted after a failure. Pickling drops
    the live process, so each worker of a process pool gets its own child.
    """

    def __init__(
        self,
        command: Sequence[str],
        a_box: Box,
        e_box: Box,
        dim_theta: int = 0,
        theta_baseline=None,
        timeout: float = 30.0,
    ):
        if not command:
            raise InvalidInputError("external model command is empty")
        self.command = list(command)
        self.a_box = a_box
        self.e_box = e_box
        self.dim_a = a_box.dim
        self.dim_e = e_box.dim
        self.dim_theta = dim_theta
        self.theta_baseline = None if theta_baseline is None else np.asarray(theta_baseline, dtype=float)
        self.timeout = timeout
        self._proc = None
        self._lines = None
        self._lock = threading.Lock()

    def __getstate__(self):
        state = self.__dict__.copy()
        state["_proc"] = None
        state["_lines"] = None
        state["_lock"] = None
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)
        self._lock = threading.Lock()

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise ModelEvaluationError(f"cannot start external model {self.command}: {exc}") from exc
        self._lines = queue.Queue()
        threading.Thread(target=self._pump, args=(self._proc.stdout, self._lines), daemon=True).start()

    @staticmethod
    def _pump(stream, lines):
        for line in stream:
            lines.put(line)
        lines.put(None)

    def close(self):
        if self._proc is not None:
            try:
                self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()
            self._proc = None

    def _kill(self):
        if self._proc is not None:
            self._proc.kill()
            self._proc.wait()
            self._proc = None

    def _request(self, line: str) -> list[str]:
        with self._lock:
            if self._proc is None or self._proc.poll() is not None:
                self._start()
            try:
                self._proc.stdin.write(line + "\n")
                self._proc.stdin.flush()
            except OSError as exc:
                self._kill()
                raise ModelEvaluationError(f"external model closed its input: {exc}") from exc
            try:
                reply = self._lines.get(timeout=self.timeout)
            except queue.Empty:
                self._kill()
                raise ModelEvaluationError(f"external model timed out after {self.timeout} s") from None
            if reply is None:
                code = self._proc.wait()
                self._proc = None
                raise ModelEvaluationError(f"external model exited with code {code}")
        tokens = reply.split()
        if tokens and tokens[0] == "ERR":
            raise ModelEvaluationError("external model error: " + reply[3:].strip())
        if not tokens or tokens[0] != "OK":
            raise ModelEvaluationError(f"malformed response from external model: {reply.strip()[:80]!r}")
        return tokens[1:]

    def simulate(self, a, e) -> TimeSeries:
        a, e = np.asarray(a, dtype=float), np.asarray(e, dtype=float)
        tokens = self._request(f"SIM {self.dim_a} {self.dim_e} {_fmt(a)} {_fmt(e)}")
        try:
            n = int(tokens[0])
            dt = float(tokens[1])
            values = np.array([float(v) for v in tokens[2:]])
        except (IndexError, ValueError) as exc:
            raise ModelEvaluationError(f"malformed SIM response: {exc}") from exc
        if values.size != n:
            raise ModelEvaluationError(f"SIM response declared {n} values but carried {values.size}")
        try:
            return TimeSeries(values, dt)
        except InvalidInputError as exc:
            raise ModelEvaluationError(f"invalid series from external model: {exc}") from exc

    def requirements(self, a, e, theta) -> np.ndarray:
        a, e, theta = (np.asarray(v, dtype=float) for v in (a, e, theta))
        tokens = self._request(
            f"REQ {self.dim_a} {self.dim_e} {theta.size} {_fmt(a)} {_fmt(e)} {_fmt(theta)}"
        )
        try:
            n = int(tokens[0])
            g = np.array([float(v) for v in tokens[1:]])
        except (IndexError, ValueError) as exc:
            raise ModelEvaluationError(f"malformed REQ response: {exc}") from exc
        if g.size != n:
            raise ModelEvaluationError(f"REQ response declared {n} values but carried {g.size}")
        return g


def external_model(command, a_box: Box, e_box: Box, dim_theta: int = 0, theta_baseline=None, timeout: float = 30.0):
    if isinstance(command, str):
        command = shlex.split(command)
    return ExternalModel(command, a_box, e_box, dim_theta, theta_baseline, timeout)


BUILTIN_MODELS = {"oscillator": SyntheticOscillator}
