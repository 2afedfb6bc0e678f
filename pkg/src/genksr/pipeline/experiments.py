"""End-to-end experiment steps behind the CLI subcommands.

Each step reads/writes only the stable file formats (frozen config, instance
list, shot JSONL, checkpoints, CSV curves/metrics), so steps can be rerun or
swapped independently and identical configs give byte-identical outputs.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .. import hamiltonians as ham
from .. import kqd, rng, shadows, simulator, skqd
from ..genmodel import (ModelParams, TokenBatch, TokenScheme, TrainConfig,
                        init_params, load_checkpoint, sample_records,
                        save_checkpoint, train)
from .config import ConfigError, ExperimentConfig, freeze_config
from .datasets import (DatasetHeader, ShotEntry, group_by_instance,
                       read_shotfile, write_shotfile)

KQD_SOURCES = ("exact_sim", "classical_shadow", "model_attention", "model_ssm")
SKQD_SOURCES = ("device_sim", "model_attention", "model_ssm")


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path, columns: list[str], rows) -> None:
    def cell(v) -> str:
        if isinstance(v, str):
            return v
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return _fmt(v)

    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(cell(v) for v in row) + "\n")


def threads_from(env_default: int | None) -> int:
    if env_default is not None:
        return max(1, env_default)
    raw = os.environ.get("GENKSR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------

def build_instances(cfg: ExperimentConfig) -> list[ham.HamiltonianInstance]:
    r = cfg.raw
    kwargs = {"n": r["n_qubits"], "side": r["side"], "j1": r["j1"],
              "periodic": r["periodic"]}
    return ham.sample_instances(r["family"], r["n_instances"], r["seed"], **kwargs)


def write_instances(cfg: ExperimentConfig, out_dir: Path,
                    instances) -> Path:
    path = out_dir / "instances.json"
    doc = {
        "family": cfg.raw["family"],
        "seed": cfg.raw["seed"],
        "n_train": cfg.raw["n_train"],
        "instances": [json.loads(ham.to_json(inst)) for inst in instances],
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")
    return path


def read_instances(out_dir: Path):
    doc = json.loads((out_dir / "instances.json").read_text(encoding="utf-8"))
    instances = [ham.from_json(json.dumps(d)) for d in doc["instances"]]
    return instances, doc["n_train"]


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

def _simulate_shots(cfg: ExperimentConfig, inst: ham.HamiltonianInstance,
                    ham_id: int, k: int):
    r = cfg.raw
    H = inst.pauli_sum
    evo = simulator.EvolutionConfig.for_hamiltonian(
        H, r["trotter"]["steps"], r["trotter"]["order"])
    g = rng.stream(r["seed"], "shots", r["mode"], ham_id, k)
    if r["mode"] == "kqd":
        state = simulator.hadamard_test_state(H, k, evo)
        records = simulator.sample_hadamard_records(state, r["shots"], g)
    else:
        state = simulator.trotter_evolve(simulator.neel_state(H.n_qubits), H, k, evo)
        records = simulator.sample_computational(state, r["shots"], g)
    return [ShotEntry(ham_id, k, rec) for rec in records]


def gen_data(cfg: ExperimentConfig, threads: int = 1) -> dict[str, Path]:
    """Simulate and write training and test-reference shot files."""
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    freeze_config(cfg, out)
    instances = build_instances(cfg)
    write_instances(cfg, out, instances)

    tasks = [(hid, k) for hid in cfg.train_ids() for k in range(cfg.raw["d_train"])]
    tasks += [(hid, k) for hid in cfg.test_ids() for k in range(cfg.raw["d_eval"])]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(tasks, pool.map(
                lambda tk: _simulate_shots(cfg, instances[tk[0]], *tk), tasks)))
    else:
        results = {tk: _simulate_shots(cfg, instances[tk[0]], *tk) for tk in tasks}

    header = DatasetHeader(cfg.record_width, cfg.token_scheme_name,
                           cfg.raw["seed"], "device_sim")
    paths = {}
    for split, ids, d_max in (("train", cfg.train_ids(), cfg.raw["d_train"]),
                              ("test", cfg.test_ids(), cfg.raw["d_eval"])):
        entries = []
        for hid in ids:
            for k in range(d_max):
                entries.extend(results[(hid, k)])
        path = out / f"shots_{split}.jsonl"
        write_shotfile(path, header, entries)
        paths[split] = path
    return paths


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

def _token_batch(cfg: ExperimentConfig, entries, instances,
                 scheme: TokenScheme) -> TokenBatch:
    grouped = group_by_instance(entries)
    conditions = []
    cond_index = {}
    rows = []
    cond_ids = []
    for hid in sorted(grouped):
        for t_index in sorted(grouped[hid]):
            key = (hid, t_index)
            if key not in cond_index:
                cond_index[key] = len(conditions)
                conditions.append((instances[hid], t_index))
            cid = cond_index[key]
            for rec in grouped[hid][t_index]:
                rows.append(scheme.encode_record(rec) if scheme.mode == "pauli6"
                            else scheme.encode_bits(rec))
                cond_ids.append(cid)
    return TokenBatch(np.stack(rows), conditions, np.array(cond_ids))


def checkpoint_path(out_dir: Path, backbone: str) -> Path:
    return out_dir / f"checkpoint_{backbone}.ckpt"


def train_model(cfg: ExperimentConfig, backbone: str | None = None) -> Path:
    """Train one backbone on shots_train.jsonl; writes checkpoint + loss CSV."""
    r = cfg.raw
    backbone = backbone or r["model"]["backbone"]
    out = cfg.out_dir
    header, entries = read_shotfile(out / "shots_train.jsonl")
    if header.token_scheme != cfg.token_scheme_name:
        raise ConfigError("dataset token scheme does not match config mode")
    instances, _ = read_instances(out)
    scheme = TokenScheme(6 if header.token_scheme == "pauli6" else 2,
                         header.n_qubits)
    dataset = _token_batch(cfg, entries, instances, scheme)

    hyper = dict(r["model"])
    hyper["backbone"] = backbone
    hyper["t_max_train"] = float(max(1, r["d_train"] - 1))
    hyper["seed"] = r["seed"]
    tc = r["train"]
    train_cfg = TrainConfig(
        learning_rate=tc["learning_rate"], batch_size=tc["batch_size"],
        max_epochs=tc["max_epochs"], adam_betas=tuple(tc["adam_betas"]),
        grad_clip=tc["grad_clip"], early_stop_patience=tc["early_stop_patience"],
        master_seed=r["seed"])
    params, trace = train(dataset, train_cfg, hyper=hyper, scheme=scheme)

    ckpt = checkpoint_path(out, backbone)
    meta = {"backbone": backbone, "family": r["family"], "mode": r["mode"],
            "d_train": r["d_train"], "shots": r["shots"],
            "epochs_run": len(trace),
            "best_val_nll": min(t["val_nll"] for t in trace)}
    save_checkpoint(params, ckpt, meta)
    write_csv(out / f"loss_{backbone}.csv", ["epoch", "train_nll", "val_nll"],
              [(t["epoch"], t["train_nll"], t["val_nll"]) for t in trace])
    return ckpt


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def generate(cfg: ExperimentConfig, backbone: str, ham_ids=None,
             t_indices=None, n_samples: int | None = None,
             ckpt: Path | None = None) -> Path:
    """Sample the trained model into a drop-in shot file (source "model")."""
    r = cfg.raw
    out = cfg.out_dir
    params, _meta = load_checkpoint(ckpt or checkpoint_path(out, backbone))
    if params.scheme.mode != cfg.token_scheme_name:
        raise ConfigError("checkpoint token scheme does not match config mode")
    if params.scheme.sequence_length != cfg.record_width:
        raise ConfigError("checkpoint sequence length does not match config")
    instances, _ = read_instances(out)
    ham_ids = list(ham_ids) if ham_ids is not None else cfg.test_ids()
    t_indices = list(t_indices) if t_indices is not None else list(range(r["d_eval"]))
    n_samples = r["gen_shots"] if n_samples is None else n_samples

    entries = []
    for hid in ham_ids:
        if not 0 <= hid < len(instances):
            raise ConfigError(f"ham_id {hid} out of range")
        for t_index in t_indices:
            g = rng.stream(r["seed"], "generate", backbone, hid, t_index)
            recs = sample_records(instances[hid], t_index, n_samples, params, g)
            entries.extend(ShotEntry(hid, t_index, rec) for rec in recs)
    header = DatasetHeader(cfg.record_width, cfg.token_scheme_name,
                           r["seed"], "model")
    path = out / f"generated_{backbone}.jsonl"
    write_shotfile(path, header, entries)
    return path


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _kqd_curve_rows(cfg: ExperimentConfig, source: str, instances):
    """Yields (ham_id, D, E_est, kept_dim, mode, shots) for one source."""
    r = cfg.raw
    d_eval = r["d_eval"]
    evo_for = lambda H: simulator.EvolutionConfig.for_hamiltonian(
        H, r["trotter"]["steps"], r["trotter"]["order"])
    rows = []
    if source == "exact_sim":
        tcfg = kqd.ThresholdConfig.exact(r["threshold"]["eps_cut_exact"])
        for hid in cfg.test_ids():
            H = instances[hid].pauli_sum
            provider = kqd.ExactElementProvider(H, evo_for(H))
            energies, kept = kqd.kqd_energy_curve(provider, d_eval, tcfg)
            rows += [(hid, D + 1, energies[D], int(kept[D]), "exact", 0)
                     for D in range(d_eval)]
        return rows
    if source == "classical_shadow":
        path = cfg.out_dir / "shots_test.jsonl"
        shots = r["shots"]
    elif source in ("model_attention", "model_ssm"):
        path = cfg.out_dir / f"generated_{source.removeprefix('model_')}.jsonl"
        shots = r["gen_shots"]
    else:
        raise ConfigError(f"unknown kqd source {source!r}")
    if not path.exists():
        raise ConfigError(f"source {source!r} needs {path.name}; run the "
                          "gen-data/generate step first")
    _, entries = read_shotfile(path)
    grouped = group_by_instance(entries)
    tcfg = kqd.ThresholdConfig.sampled(r["threshold"]["eps_cut_sampled"])
    for hid in cfg.test_ids():
        if hid not in grouped:
            raise ConfigError(f"{path.name} lacks shots for instance {hid}")
        records_by_k = {k: grouped[hid][k] for k in sorted(grouped[hid])
                        if k < d_eval}
        provider = kqd.ShadowElementProvider(instances[hid].pauli_sum, records_by_k)
        energies, kept = kqd.kqd_energy_curve(provider, d_eval, tcfg)
        rows += [(hid, D + 1, energies[D], int(kept[D]), "sampled", shots)
                 for D in range(d_eval)]
    return rows


def _skqd_curve_rows(cfg: ExperimentConfig, source: str, instances):
    """Yields (ham_id, D, E_est, basis_size, shots, source) for one source."""
    r = cfg.raw
    d_eval = r["d_eval"]
    if source == "device_sim":
        path = cfg.out_dir / "shots_test.jsonl"
        shots = r["shots"]
    elif source in ("model_attention", "model_ssm"):
        path = cfg.out_dir / f"generated_{source.removeprefix('model_')}.jsonl"
        shots = r["gen_shots"]
    else:
        raise ConfigError(f"unknown skqd source {source!r}")
    if not path.exists():
        raise ConfigError(f"source {source!r} needs {path.name}")
    _, entries = read_shotfile(path)
    grouped = group_by_instance(entries)
    rows = []
    for hid in cfg.test_ids():
        if hid not in grouped:
            raise ConfigError(f"{path.name} lacks shots for instance {hid}")
        samples = {k: v for k, v in grouped[hid].items() if k < d_eval}
        energies, sizes = skqd.skqd_energy_curve(
            instances[hid].pauli_sum, samples, d_eval, r["sz_filter"])
        rows += [(hid, D + 1, energies[D], sizes[D], shots, source)
                 for D in range(d_eval)]
    return rows


def _rmse(curves: dict[int, np.ndarray], reference: dict[int, np.ndarray]) -> float:
    diffs = [curves[hid] - reference[hid] for hid in sorted(reference)]
    return float(np.sqrt(np.mean(np.square(diffs))))


def _as_curves(rows, e_col: int = 2) -> dict[int, np.ndarray]:
    out: dict[int, dict[int, float]] = {}
    for row in rows:
        out.setdefault(row[0], {})[row[1]] = row[e_col]
    return {hid: np.array([by_d[D] for D in sorted(by_d)])
            for hid, by_d in out.items()}


def evaluate(cfg: ExperimentConfig, sources: list[str] | None = None) -> dict[str, Path]:
    """Energy curves per source plus RMSE/error summaries and quantile tables.

    The RMSE reference is the analytic simulation in kqd mode and the
    direct-sampling run in skqd mode; absolute errors compare against exact
    diagonalization of each instance.
    """
    r = cfg.raw
    out = cfg.out_dir
    instances, _ = read_instances(out)
    is_kqd = r["mode"] == "kqd"
    reference_source = "exact_sim" if is_kqd else "device_sim"
    if sources is None:
        sources = [reference_source]
    if reference_source not in sources:
        sources = [reference_source] + list(sources)
    valid = KQD_SOURCES if is_kqd else SKQD_SOURCES
    for s in sources:
        if s not in valid:
            raise ConfigError(f"source {s!r} not valid in {r['mode']} mode "
                              f"(choose from {valid})")

    exact_e0 = {hid: simulator.exact_ground_energy(instances[hid].pauli_sum)[0]
                for hid in cfg.test_ids()}

    paths: dict[str, Path] = {}
    all_rows: dict[str, list] = {}
    for source in sources:
        rows = (_kqd_curve_rows(cfg, source, instances) if is_kqd
                else _skqd_curve_rows(cfg, source, instances))
        all_rows[source] = rows
        path = out / f"curves_{source}.csv"
        cols = (["ham_id", "D", "E_est", "kept_dim", "mode", "shots"] if is_kqd
                else ["ham_id", "D", "E_est", "basis_size", "shots", "source"])
        write_csv(path, cols, rows)
        paths[source] = path

    reference = _as_curves(all_rows[reference_source])
    summary_rows = []
    quantile_rows = []
    for source in sources:
        curves = _as_curves(all_rows[source])
        rmse = _rmse(curves, reference)
        err_by_d = {}
        for hid, es in curves.items():
            for D, e in enumerate(es, start=1):
                err_by_d.setdefault(D, []).append(abs(e - exact_e0[hid]))
        d_eval = r["d_eval"]
        final_errors = np.array(err_by_d[d_eval])
        summary_rows.append((source, reference_source, len(curves), d_eval,
                             rmse, float(final_errors.mean()),
                             float(np.median(final_errors))))
        for D in sorted(err_by_d):
            errs = np.array(err_by_d[D])
            q1, med, q3 = np.percentile(errs, [25, 50, 75])
            quantile_rows.append((source, D, med, q1, q3,
                                  float(errs.min()), float(errs.max())))

    summary = out / "summary.csv"
    write_csv(summary, ["source", "reference", "n_instances", "d_eval",
                        "rmse", "delta_e_mean", "delta_e_median"], summary_rows)
    quantiles = out / "quantiles.csv"
    write_csv(quantiles, ["source", "D", "median", "q1", "q3", "lo", "hi"],
              quantile_rows)
    paths["summary"] = summary
    paths["quantiles"] = quantiles
    return paths


# ---------------------------------------------------------------------------
# complexity
# ---------------------------------------------------------------------------

def _term_count(family: str, n: int) -> int | None:
    if family == "heis1d":
        return len(ham.build_heisenberg_1d(n, [1.0] * (n - 1)).pauli_sum.terms)
    if family == "xxz_chain":
        return len(ham.build_xxz_chain(n, 1.0, periodic=True).pauli_sum.terms)
    side = int(round(n ** 0.5))
    if side * side != n or side < 2:
        return None
    return len(ham.build_j1j2_2d(side, 1.0, 0.5).pauli_sum.terms)


def complexity_tables(eps_list, L: int, k_max: int, delta: float,
                      family: str = "heis1d", n_range=range(5, 21)):
    """((eps, M) rows at fixed L, (n, L(n), M) rows at fixed eps=min(eps_list)).

    L(n) is the Hamiltonian term count of the family at n qubits; sizes the
    family cannot realize (non-square j1j2 counts) are skipped.
    """
    eps_rows = [(float(e), shadows.sample_complexity(float(e), L, k_max, delta))
                for e in eps_list]
    eps_fixed = min(float(e) for e in eps_list)
    qubit_rows = []
    for n in n_range:
        terms = _term_count(family, n)
        if terms is None:
            continue
        qubit_rows.append((n, terms,
                           shadows.sample_complexity(eps_fixed, terms, k_max, delta)))
    return eps_rows, qubit_rows
