"""Client side of the worker farm: registry, batch dispatch, local spawning."""
from __future__ import annotations

import contextlib
import queue
import socket
import subprocess
import sys
import threading
from dataclasses import dataclass, field

import numpy as np

from .optimizer import EvaluationError
from .protocol import (
    FrameError,
    JobRequest,
    JobResult,
    MessageType,
    Status,
    parse_endpoint,
    read_message,
    send_message,
)

CONNECT_TIMEOUT = 10.0
SHUTDOWN_TIMEOUT = 5.0


class DispatchError(RuntimeError):
    pass


class BatchError(DispatchError):
    """A job came back with a non-OK status or could not be completed."""

    def __init__(self, job_id: int, message: str, status: Status | None = None):
        super().__init__(f"job {job_id}: {message}")
        self.job_id = job_id
        self.status = status


class WorkerFailure(DispatchError):
    pass


@dataclass
class WorkerHandle:
    endpoint: str
    partitions: int = 1
    state: str = "idle"  # idle | busy | failed
    sock: socket.socket | None = field(default=None, repr=False)

    def connect(self) -> None:
        host, port = parse_endpoint(self.endpoint)
        self.sock = socket.create_connection((host, port), timeout=CONNECT_TIMEOUT)
        self.sock.settimeout(None)

    def call(self, req: JobRequest) -> JobResult:
        try:
            if self.sock is None:
                self.connect()
            send_message(self.sock, req)
            res = read_message(self.sock)
        except (OSError, EOFError, FrameError) as exc:
            self.fail()
            raise WorkerFailure(f"{self.endpoint}: {exc}") from exc
        if not isinstance(res, JobResult) or res.job_id != req.job_id:
            self.fail()
            raise WorkerFailure(f"{self.endpoint}: reply does not echo job {req.job_id}")
        return res

    def fail(self) -> None:
        self.state = "failed"
        self.close()

    def close(self) -> None:
        if self.sock is not None:
            with contextlib.suppress(OSError):
                self.sock.close()
            self.sock = None


class WorkerRegistry:
    """Servers the coordinator may use; each may itself be a ``partitions``-rank group."""

    def __init__(self, endpoints, partitions: int = 1, node_budget: int | None = None):
        self.workers = [WorkerHandle(e, partitions) for e in endpoints]
        if node_budget is not None and self.total_nodes > node_budget:
            raise ValueError(f"{self.total_nodes} nodes exceed the budget of {node_budget}")
        self._next_id = 1

    @property
    def total_nodes(self) -> int:
        return sum(w.partitions for w in self.workers)

    def live(self) -> list[WorkerHandle]:
        return [w for w in self.workers if w.state != "failed"]

    def next_job_id(self) -> int:
        jid = self._next_id
        self._next_id += 1
        return jid

    def broadcast(self, kind: MessageType, blob: bytes = b"") -> None:
        for w in self.live():
            res = w.call(JobRequest(self.next_job_id(), kind, (), blob))
            if res.status is not Status.OK:
                raise BatchError(res.job_id, res.message, res.status)

    def load_problem(self, blob: bytes) -> None:
        self.broadcast(MessageType.LOAD_PROBLEM, blob)

    def shutdown(self) -> None:
        for w in self.workers:
            if w.state == "failed":
                continue
            with contextlib.suppress(DispatchError, OSError):
                if w.sock is None:
                    w.connect()
                w.sock.settimeout(SHUTDOWN_TIMEOUT)  # a worker busy with another client never answers
                w.call(JobRequest(0, MessageType.SHUTDOWN))
            w.close()

    def close(self) -> None:
        for w in self.workers:
            w.close()


def dispatch_batch(registry: WorkerRegistry, jobs: list[JobRequest]) -> list[JobResult]:
    """Run ``jobs`` on the live workers; results come back ordered by job id.

    Idle workers pull jobs greedily.  A job whose worker dies is requeued
    once; a second loss, or a non-OK status, fails the batch.
    """
    workers = registry.live()
    if not workers:
        raise DispatchError("no live workers")
    if len({j.job_id for j in jobs}) != len(jobs):
        raise ValueError("job ids must be unique within a batch")
    pending: queue.Queue = queue.Queue()
    for j in jobs:
        pending.put((j, 0))
    results: dict[int, JobResult] = {}
    errors: list[Exception] = []
    lock = threading.Lock()
    done = threading.Event()
    alive = [len(workers)]

    def finish_if_complete():
        if len(results) == len(jobs) or errors:
            done.set()

    def run(w: WorkerHandle):
        try:
            while not done.is_set():
                try:
                    job, attempts = pending.get(timeout=0.01)
                except queue.Empty:
                    continue
                w.state = "busy"
                try:
                    res = w.call(job)
                except Exception as exc:  # any failure to get a reply retires this worker
                    w.fail()
                    with lock:
                        if attempts >= 1:
                            errors.append(BatchError(job.job_id, f"failed twice: {exc}"))
                        else:
                            pending.put((job, attempts + 1))
                        finish_if_complete()
                    return
                w.state = "idle"
                with lock:
                    if res.status is not Status.OK:
                        errors.append(BatchError(res.job_id, res.message or res.status.name, res.status))
                    else:
                        results[res.job_id] = res
                    finish_if_complete()
        finally:
            with lock:
                alive[0] -= 1
                if alive[0] == 0 and not done.is_set():
                    errors.append(DispatchError("all workers failed"))
                    done.set()

    threads = [threading.Thread(target=run, args=(w,), daemon=True) for w in workers]
    for t in threads:
        t.start()
    if jobs:
        done.wait()
    else:
        done.set()
    for t in threads:
        t.join()
    if errors:
        raise errors[0]
    return [results[j] for j in sorted(results)]


class RemoteExecutor:
    """Batch evaluator backed by :func:`dispatch_batch` (optimizer executor interface)."""

    def __init__(self, registry: WorkerRegistry):
        self.registry = registry
        self.batch_sizes: list[int] = []

    def __call__(self, thetas) -> list[float]:
        self.batch_sizes.append(len(thetas))
        kind = MessageType.EVALUATE_ENERGY if len(thetas) == 1 else MessageType.EVALUATE_BATCH_ELEMENT
        jobs = [
            JobRequest(self.registry.next_job_id(), kind, tuple(np.asarray(t, dtype=float).tolist()))
            for t in thetas
        ]
        index = {j.job_id: i for i, j in enumerate(jobs)}
        try:
            results = dispatch_batch(self.registry, jobs)
        except BatchError as exc:
            raise EvaluationError(index.get(exc.job_id, -1), str(exc)) from exc
        return [results[i].energy for i in range(len(jobs))]


# -- local process spawning ---------------------------------------------------------


def spawn_local_worker(partitions: int = 1, host: str = "127.0.0.1") -> tuple[str, subprocess.Popen]:
    proc = subprocess.Popen(
        [sys.executable, "-m", "vqehpc.cli", "worker", "--listen", f"{host}:0"],
        stdout=subprocess.PIPE,
        text=True,
    )
    line = proc.stdout.readline().strip()
    if not line.startswith("listening "):
        proc.kill()
        raise DispatchError(f"worker failed to start: {line!r}")
    return line.split()[1], proc


@contextlib.contextmanager
def local_workers(count: int, partitions: int = 1):
    """Spawn ``count`` loopback worker processes; yields a connected registry."""
    spawned = []
    try:
        for _ in range(count):
            spawned.append(spawn_local_worker(partitions))
        registry = WorkerRegistry([e for e, _ in spawned], partitions)
        yield registry
        registry.shutdown()
    finally:
        for _, proc in spawned:
            try:
                proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
            if proc.stdout:
                proc.stdout.close()
