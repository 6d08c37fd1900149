"""Evaluation server: one connection at a time, one job at a time."""
from __future__ import annotations

import json
import logging
import os
import socket
from dataclasses import dataclass

from .ansatz import AnsatzCircuit, energy, format_circuit, parse_circuit
from .engines import make_engine
from .pauli import QubitHamiltonian, format_hamiltonian, parse_hamiltonian
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

log = logging.getLogger(__name__)

DEFAULT_LISTEN_ENV = "VQEHPC_WORKER_ADDR"
DEFAULT_LISTEN = "127.0.0.1:0"


@dataclass
class Problem:
    hamiltonian: QubitHamiltonian
    circuit: AnsatzCircuit
    partitions: int = 1

    def to_blob(self) -> bytes:
        return json.dumps(
            {
                "hamiltonian": format_hamiltonian(self.hamiltonian),
                "circuit": format_circuit(self.circuit),
                "partitions": self.partitions,
            }
        ).encode()

    @classmethod
    def from_blob(cls, blob: bytes) -> "Problem":
        d = json.loads(blob.decode())
        return cls(parse_hamiltonian(d["hamiltonian"]), parse_circuit(d["circuit"]), int(d.get("partitions", 1)))

    def evaluate(self, theta) -> float:
        return energy(self.circuit, theta, self.hamiltonian, make_engine(self.partitions))


def handle_request(req: JobRequest, store: dict) -> JobResult:
    """Execute one request against ``store`` (which caches the loaded problem)."""
    kind = req.kind
    if kind is MessageType.PING:
        return JobResult(req.job_id, kind)
    if kind is MessageType.LOAD_PROBLEM:
        try:
            store["problem"] = Problem.from_blob(req.blob)
        except Exception as exc:  # malformed problem text is the caller's error, not ours
            return JobResult(req.job_id, kind, status=Status.BAD_REQUEST, message=str(exc))
        return JobResult(req.job_id, kind)
    if kind in (MessageType.EVALUATE_ENERGY, MessageType.EVALUATE_BATCH_ELEMENT):
        problem = store.get("problem")
        if problem is None:
            return JobResult(req.job_id, kind, status=Status.NO_PROBLEM, message="no problem loaded")
        try:
            e = problem.evaluate(req.theta)
        except Exception as exc:
            return JobResult(req.job_id, kind, status=Status.EVALUATION_FAILED, message=str(exc))
        return JobResult(req.job_id, kind, (e,))
    return JobResult(req.job_id, kind, status=Status.BAD_REQUEST, message=f"unexpected {kind.name}")


def bind(listen_endpoint: str | None = None) -> socket.socket:
    host, port = parse_endpoint(listen_endpoint or os.environ.get(DEFAULT_LISTEN_ENV, DEFAULT_LISTEN))
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen()
    return srv


def serve_worker(listen_endpoint: str | socket.socket | None = None, problem_store: dict | None = None, announce=None) -> None:
    """Serve until a Shutdown frame arrives.

    ``announce`` receives the bound ``host:port`` once listening (the CLI
    prints it so a parent process can discover an ephemeral port).
    """
    srv = listen_endpoint if isinstance(listen_endpoint, socket.socket) else bind(listen_endpoint)
    store = {} if problem_store is None else problem_store
    host, port = srv.getsockname()[:2]
    if announce:
        announce(f"{host}:{port}")
    try:
        while True:
            conn, _ = srv.accept()
            with conn:
                if _serve_connection(conn, store):
                    return
    finally:
        srv.close()


def _serve_connection(conn: socket.socket, store: dict) -> bool:
    """Returns True on Shutdown."""
    while True:
        try:
            req = read_message(conn)
        except EOFError:
            return False
        except (FrameError, OSError) as exc:
            log.warning("closing connection: %s", exc)
            return False
        if not isinstance(req, JobRequest):
            log.warning("closing connection: unexpected %s", type(req).__name__)
            return False
        if req.kind is MessageType.SHUTDOWN:
            send_message(conn, JobResult(req.job_id, MessageType.SHUTDOWN))
            return True
        send_message(conn, handle_request(req, store))
