"""Binary dataset / checkpoint formats and CSV logs.

Dataset files ("CSIDS") hold either time-domain channel records or CSI
eigenvector records: a little-endian header with dims, count, seed
provenance and a JSON parameter echo, followed by float32 interleaved
real/imag payloads plus per-record metadata. Payloads are stored in float32,
so a write->read round trip is exact for float32-valued data; loaded CSI
columns are re-normalized in float64 to restore exact unit norms.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .channel import ORIGINS, CsiEigen, TimeChannel

MAGIC = b"CSIDS"
CKPT_MAGIC = b"CSICK"
VERSION = 1
KIND_TIME = 1
KIND_CSI = 2
_NO_TASK = 0xFFFFFFFF

_ORIGIN_CODE = {name: i for i, name in enumerate(ORIGINS)}
_ORIGIN_NAME = {i: name for name, i in _ORIGIN_CODE.items()}


class DatasetFormatError(Exception):
    pass


def _read_exact(fh, n: int) -> bytes:
    buf = fh.read(n)
    if len(buf) != n:
        raise DatasetFormatError("truncated file")
    return buf


class DatasetWriter:
    """Streams records to disk; the count is patched into the header on close."""

    def __init__(self, path, kind: int, dims: tuple, seed: int, echo: dict = None):
        self.kind = kind
        self.dims = tuple(int(d) for d in dims)
        self._n_complex = int(np.prod(self.dims))
        self._count = 0
        echo_bytes = json.dumps(echo or {}, sort_keys=True).encode("utf-8")
        self._fh = open(path, "wb")
        self._fh.write(MAGIC)
        self._fh.write(struct.pack("<HBQ", VERSION, kind, seed & (2 ** 64 - 1)))
        self._fh.write(struct.pack("<B", len(self.dims)))
        self._fh.write(struct.pack(f"<{len(self.dims)}I", *self.dims))
        self._count_pos = self._fh.tell()
        self._fh.write(struct.pack("<Q", 0))
        self._fh.write(struct.pack("<I", len(echo_bytes)))
        self._fh.write(echo_bytes)

    def _write_meta(self, ue_id: int, slot: int, task_id: int, origin: str):
        code = _ORIGIN_CODE[origin]
        task = _NO_TASK if task_id is None or task_id < 0 else int(task_id)
        self._fh.write(struct.pack("<IIIB", int(ue_id), int(slot), task, code))

    def _write_payload(self, values: np.ndarray):
        v = np.asarray(values, dtype=np.complex128).reshape(-1)
        if v.size != self._n_complex:
            raise DatasetFormatError(
                f"payload size {v.size} does not match dims {self.dims}")
        inter = np.empty(2 * v.size, dtype="<f4")
        inter[0::2] = v.real
        inter[1::2] = v.imag
        self._fh.write(inter.tobytes())

    def add_time_channel(self, tc: TimeChannel):
        if self.kind != KIND_TIME:
            raise DatasetFormatError("writer kind is not time-channel")
        self._write_meta(tc.ue_id, tc.slot_index, None, "simulated")
        self._write_payload(tc.h)
        self._count += 1

    def add_csi(self, sample: CsiEigen):
        if self.kind != KIND_CSI:
            raise DatasetFormatError("writer kind is not csi-eigen")
        self._write_meta(sample.ue_id, sample.slot_index, sample.task_id,
                         sample.origin)
        self._write_payload(sample.w)
        self._fh.write(np.asarray(sample.eigvals, dtype="<f4").tobytes())
        self._count += 1

    def close(self):
        self._fh.seek(self._count_pos)
        self._fh.write(struct.pack("<Q", self._count))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_dataset(path):
    """Returns (kind, dims, seed, echo dict, records list).

    Time-channel records are TimeChannel; CSI records are CsiEigen with
    columns re-normalized in float64.
    """
    with open(path, "rb") as fh:
        if _read_exact(fh, 5) != MAGIC:
            raise DatasetFormatError("bad magic")
        version, kind, seed = struct.unpack("<HBQ", _read_exact(fh, 11))
        if version != VERSION:
            raise DatasetFormatError(f"unsupported version {version}")
        ndim, = struct.unpack("<B", _read_exact(fh, 1))
        dims = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
        count, = struct.unpack("<Q", _read_exact(fh, 8))
        echo_len, = struct.unpack("<I", _read_exact(fh, 4))
        echo = json.loads(_read_exact(fh, echo_len).decode("utf-8")) if echo_len else {}
        n_complex = int(np.prod(dims))
        records = []
        for _ in range(count):
            ue, slot, task, code = struct.unpack("<IIIB", _read_exact(fh, 13))
            raw = np.frombuffer(_read_exact(fh, 8 * n_complex), dtype="<f4")
            vals = (raw[0::2].astype(np.float64)
                    + 1j * raw[1::2].astype(np.float64)).reshape(dims)
            if kind == KIND_TIME:
                records.append(TimeChannel(h=vals, ue_id=ue, slot_index=slot))
            elif kind == KIND_CSI:
                eig = np.frombuffer(_read_exact(fh, 4 * dims[1]),
                                    dtype="<f4").astype(np.float64)
                norms = np.linalg.norm(vals, axis=0)
                norms[norms == 0.0] = 1.0
                records.append(CsiEigen(
                    w=vals / norms[None, :], eigvals=eig, ue_id=ue,
                    slot_index=slot, origin=_ORIGIN_NAME[code],
                    task_id=-1 if task == _NO_TASK else task))
            else:
                raise DatasetFormatError(f"unknown record kind {kind}")
        if fh.read(1):
            raise DatasetFormatError("trailing bytes after declared records")
    return kind, dims, seed, echo, records


def write_env_meta(path, env, echo: dict = None):
    """JSON sidecar with the task skeletons needed to rebuild mini-batching."""
    doc = {
        "seed": env.env_cfg.seed,
        "echo": echo or {},
        "tasks": [
            {
                "task_id": t.task_id,
                "p_idx": t.p_idx,
                "s_task": [int(i) for i in t.s_task],
                "f_task": [int(i) for i in t.f_task],
                "n_ue": t.n_ue,
                "n_slot": t.n_slot,
                "ues": [
                    {
                        "s_ue": [int(i) for i in r.s_ue],
                        "f_ue": [int(i) for i in r.f_ue],
                        "l_m": r.l_m,
                        "m_m": r.m_m,
                    }
                    for r in t.ue_records
                ],
            }
            for t in env.tasks
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)


def read_env_meta(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def group_csi_by_task(records: list) -> list:
    """Task-ordered lists of CSI samples (records must carry task ids)."""
    by_task = {}
    for rec in records:
        by_task.setdefault(rec.task_id, []).append(rec)
    return [by_task[tid] for tid in sorted(by_task)]


def save_checkpoint(path, model_cfg, params: dict, echo: dict = None):
    """Versioned binary checkpoint: config echo header + float64 arrays."""
    head = {
        "model": {
            "n_t": model_cfg.n_t, "n_sb": model_cfg.n_sb,
            "d_lat": model_cfg.d_lat,
            "bits_per_latent": model_cfg.bits_per_latent,
            "enc_widths": list(model_cfg.enc_widths),
            "dec_widths": list(model_cfg.dec_widths),
            "init_scale": model_cfg.init_scale,
        },
        "echo": echo or {},
    }
    head_bytes = json.dumps(head, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CKPT_MAGIC)
        fh.write(struct.pack("<HI", VERSION, len(head_bytes)))
        fh.write(head_bytes)
        fh.write(struct.pack("<I", len(params)))
        for key in sorted(params):
            arr = np.ascontiguousarray(params[key], dtype="<f8")
            name = key.encode("utf-8")
            fh.write(struct.pack("<H", len(name)))
            fh.write(name)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path):
    """Returns (ModelConfig, params dict, echo dict)."""
    from .model import ModelConfig

    with open(path, "rb") as fh:
        if _read_exact(fh, 5) != CKPT_MAGIC:
            raise DatasetFormatError("bad checkpoint magic")
        version, head_len = struct.unpack("<HI", _read_exact(fh, 6))
        if version != VERSION:
            raise DatasetFormatError(f"unsupported checkpoint version {version}")
        head = json.loads(_read_exact(fh, head_len).decode("utf-8"))
        n_arrays, = struct.unpack("<I", _read_exact(fh, 4))
        params = {}
        for _ in range(n_arrays):
            name_len, = struct.unpack("<H", _read_exact(fh, 2))
            name = _read_exact(fh, name_len).decode("utf-8")
            ndim, = struct.unpack("<B", _read_exact(fh, 1))
            shape = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim))
            arr = np.frombuffer(_read_exact(fh, 8 * int(np.prod(shape))),
                                dtype="<f8").reshape(shape).copy()
            params[name] = arr
    m = head["model"]
    cfg = ModelConfig(n_t=m["n_t"], n_sb=m["n_sb"], d_lat=m["d_lat"],
                      bits_per_latent=m["bits_per_latent"],
                      enc_widths=tuple(m["enc_widths"]),
                      dec_widths=tuple(m["dec_widths"]),
                      init_scale=m["init_scale"])
    return cfg, params, head.get("echo", {})


def write_log_csv(path, log, echo: dict = None):
    """step,loss,eval_sgcs,best_sgcs,wall_ms rows with a '#' config echo."""
    with open(path, "w", encoding="utf-8") as fh:
        if echo:
            fh.write("# config=" + json.dumps(echo, sort_keys=True) + "\n")
        fh.write("step,loss,eval_sgcs,best_sgcs,wall_ms\n")
        for step, loss, ev, best, wall in log.rows:
            fh.write(f"{step},{loss!r},{ev!r},{best!r},{wall:.3f}\n")
