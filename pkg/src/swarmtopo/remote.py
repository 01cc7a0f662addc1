"""Client side of the remote-annealer protocol.

Two transports share one JSON payload:

* HTTP: ``POST {endpoint}/solve`` with the request body, JSON response.
* File: ``endpoint`` is a job directory; the client writes ``request.json``
  and waits for ``response.json`` to appear.

Request body::

    {"dim": M, "entries": [[e, f, coeff], ...],
     "num_samples": k, "seed": s,
     "sa": {"sweeps": ..., "t_initial": ..., "t_final": ..., "restarts_per_sample": ...}}

Response body::

    {"topologies": [[0, 1, ...], ...], "energies": [...], "wall_time_s": ...}
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import asdict
from pathlib import Path

import httpx
import numpy as np

from .qubo import QuboMatrix, evaluate_objective, from_exchange, to_exchange
from .samplers import SAParams, SampleBatch, SamplerConfig, sa_sample

DEFAULT_TIMEOUT_S = 120.0
ENDPOINT_ENV = "SWARMTOPO_REMOTE_ENDPOINT"


class RemoteError(RuntimeError):
    pass


class RemoteTransportError(RemoteError):
    """Endpoint unreachable or I/O failure. Safe to retry."""

    retryable = True


class RemoteProtocolError(RemoteError):
    retryable = False


class RemoteTimeoutError(RemoteError):
    retryable = True


def build_request(q: QuboMatrix, cfg: SamplerConfig) -> dict:
    body = to_exchange(q)
    body["num_samples"] = cfg.num_samples
    body["seed"] = cfg.seed
    body["sa"] = asdict(cfg.sa)
    return body


def parse_request(body: dict) -> tuple[QuboMatrix, SamplerConfig]:
    q = from_exchange(body)
    cfg = SamplerConfig(
        num_samples=int(body.get("num_samples", 1)),
        seed=int(body.get("seed", 0)),
        sa=SAParams(**body.get("sa", {})),
    )
    return q, cfg


def batch_to_response(batch: SampleBatch) -> dict:
    return {
        "topologies": [[int(b) for b in x] for x in batch.topologies],
        "energies": [float(e) for e in batch.energies],
        "wall_time_s": float(batch.wall_time_s),
    }


def parse_response(body, dim: int, expected: int) -> SampleBatch:
    if not isinstance(body, dict) or "topologies" not in body or "energies" not in body:
        raise RemoteProtocolError("response must contain 'topologies' and 'energies'")
    topos, energies = body["topologies"], body["energies"]
    if len(topos) != expected:
        raise RemoteProtocolError(
            f"expected {expected} topologies in response, got {len(topos)}"
        )
    if len(energies) != len(topos):
        raise RemoteProtocolError(
            f"response has {len(topos)} topologies but {len(energies)} energies"
        )
    out = []
    for bits in topos:
        x = np.asarray(bits)
        if x.shape != (dim,) or not np.all((x == 0) | (x == 1)):
            raise RemoteProtocolError(f"malformed topology in response (expected {dim} bits)")
        out.append(x.astype(np.uint8))
    return SampleBatch(out, [float(e) for e in energies], float(body.get("wall_time_s", 0.0)))


def solve_request(body: dict) -> dict:
    """Reference handler used by the stub service and the file-mode worker."""
    q, cfg = parse_request(body)
    return batch_to_response(sa_sample(q, cfg))


def _is_http(endpoint: str) -> bool:
    return endpoint.startswith("http://") or endpoint.startswith("https://")


def remote_submit(
    q: QuboMatrix,
    cfg: SamplerConfig,
    endpoint: str | os.PathLike,
    timeout: float = DEFAULT_TIMEOUT_S,
    client: httpx.Client | None = None,
    poll_interval: float = 0.05,
) -> SampleBatch:
    """Send ``q`` to a remote annealer and wait for ``cfg.num_samples`` states."""
    body = build_request(q, cfg)
    endpoint = str(endpoint)
    if _is_http(endpoint) or client is not None:
        payload = _submit_http(body, endpoint, timeout, client)
    else:
        payload = _submit_file(body, Path(endpoint), timeout, poll_interval)
    batch = parse_response(payload, q.dim, cfg.num_samples)
    for x, e in zip(batch.topologies, batch.energies):
        ref = evaluate_objective(x, q)
        if abs(ref - e) > 1e-9 * max(1.0, abs(ref)):
            raise RemoteProtocolError(f"reported energy {e} disagrees with {ref} for a returned state")
    return batch


def _submit_http(body, endpoint, timeout, client):
    url = endpoint.rstrip("/") + "/solve"
    try:
        if client is None:
            with httpx.Client(timeout=timeout) as c:
                resp = c.post(url, json=body)
        else:
            resp = client.post(url, json=body)  # injected clients carry their own timeout
    except httpx.TimeoutException as exc:
        raise RemoteTimeoutError(f"no response from {url} within {timeout} s") from exc
    except httpx.TransportError as exc:
        raise RemoteTransportError(f"cannot reach {url}: {exc}") from exc
    if resp.status_code >= 500:
        raise RemoteTransportError(f"{url} answered HTTP {resp.status_code}")
    if resp.status_code != 200:
        raise RemoteProtocolError(f"{url} answered HTTP {resp.status_code}: {resp.text[:200]}")
    try:
        return resp.json()
    except ValueError as exc:
        raise RemoteProtocolError(f"{url} returned non-JSON body") from exc


def _submit_file(body, job_dir: Path, timeout, poll_interval):
    response = job_dir / "response.json"
    try:
        job_dir.mkdir(parents=True, exist_ok=True)
        if response.exists():
            response.unlink()
        tmp = job_dir / "request.json.tmp"
        tmp.write_text(json.dumps(body))
        os.replace(tmp, job_dir / "request.json")
    except OSError as exc:
        raise RemoteTransportError(f"cannot write job to {job_dir}: {exc}") from exc
    deadline = time.monotonic() + timeout
    while not response.exists():
        if time.monotonic() > deadline:
            raise RemoteTimeoutError(f"no response.json in {job_dir} within {timeout} s")
        time.sleep(poll_interval)
    try:
        return json.loads(response.read_text())
    except ValueError as exc:
        raise RemoteProtocolError(f"{response} is not valid JSON") from exc


def serve_job_dir(job_dir: str | os.PathLike) -> Path:
    """Answer a pending file-mode job with the local annealer."""
    job_dir = Path(job_dir)
    body = json.loads((job_dir / "request.json").read_text())
    tmp = job_dir / "response.json.tmp"
    tmp.write_text(json.dumps(solve_request(body)))
    os.replace(tmp, job_dir / "response.json")
    return job_dir / "response.json"


class RemoteSampler:
    """Sampler adapter bound to one endpoint."""

    def __init__(self, endpoint: str | None = None, timeout: float = DEFAULT_TIMEOUT_S,
                 client: httpx.Client | None = None):
        endpoint = endpoint or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise RemoteTransportError(
                f"no remote endpoint given and {ENDPOINT_ENV} is not set"
            )
        self.endpoint = endpoint
        self.timeout = timeout
        self.client = client

    def __call__(self, q: QuboMatrix, cfg: SamplerConfig) -> SampleBatch:
        return remote_submit(q, cfg, self.endpoint, timeout=self.timeout, client=self.client)
