"""Deterministic report emission: JSON records and delimited rho-grid tables.

Reports are byte-stable given identical inputs: keys are sorted, floats use
their shortest round-trip representation, and no timestamps are embedded.
Checked numerics carry the tolerance they were validated against.
"""

from __future__ import annotations

import csv
import io
import json

import numpy as np


def checked(value, tol):
    return {"value": value, "tol": tol}


def _c(z):
    z = complex(z)
    return [z.real, z.imag]


def orbit_payload(orbit, action_value=None, tol=1e-10):
    payload = {
        "schema_version": 1,
        "kind": "orbit",
        "period": orbit.period,
        "dim": orbit.dim,
        "points": np.asarray(orbit.points, dtype=float).tolist(),
        "residual_norm": checked(float(orbit.residual_norm), tol),
        "converged": bool(orbit.converged),
        "degenerate_suspect": bool(orbit.degenerate_suspect),
        "newton_history": [float(r) for r in orbit.newton_history],
    }
    if orbit.chart_tags is not None:
        payload["chart_tags"] = list(orbit.chart_tags)
    if action_value is not None:
        payload["action"] = float(action_value)
    return payload


def verdicts_payload(v):
    if v is None:
        return None
    return {
        "predicted_real_multiplier_gt1": v.predicted_real_multiplier_gt1,
        "predicted_real_multiplier_ltm1": v.predicted_real_multiplier_ltm1,
        "predicted_exponential_instability": v.predicted_exponential_instability,
        "hyperbolic": v.hyperbolic,
        "elliptic": v.elliptic,
        "billiard_instability": v.billiard_instability,
        "degenerate_at_1": v.degenerate_at_1,
        "degenerate_at_minus_1": v.degenerate_at_minus_1,
        "index": v.index,
        "nullity": v.nullity,
        "index_minus_1": v.index_minus_1,
        "nullity_minus_1": v.nullity_minus_1,
        "index_doubled": v.index_doubled,
        "notes": list(v.notes),
    }


def hill_report_payload(report, identity_tol=1e-8):
    return {
        "schema_version": 1,
        "kind": "hill_report",
        "multipliers": [_c(z) for z in report.multipliers],
        "sigma": report.sigma,
        "beta": report.beta,
        "log_beta": report.log_beta,
        "morse_index": report.morse_index,
        "nullity": report.nullity,
        "max_identity_residual": checked(report.max_residual, identity_tol),
        "multiplier_pairing_defect": checked(report.pairing_defect, 1e-8),
        "reciprocity_defect": checked(report.reciprocity_defect, 1e-8),
        "rho_indices": [[idx, nul] for idx, nul in report.rho_indices],
        "verdicts": verdicts_payload(report.verdicts),
        "from_finite_differences": report.from_finite_differences,
        "provenance": report.provenance,
    }


def routh_payload(index_report, rho_reports=()):
    if index_report is None:
        return None
    payload = {
        "conditions": list(index_report.conditions),
        "indices": {
            "full": index_report.ind_full,
            "full_nullity": index_report.null_full,
            "reduced": index_report.ind_reduced,
            "reduced_nullity": index_report.null_reduced,
            "symmetry_block": index_report.ind_symmetry_block,
            "shear_form": index_report.ind_b,
            "a": index_report.ind_a,
            "a_perp": index_report.ind_a_perp,
            "g": list(index_report.ind_g),
            "g_bar": index_report.ind_g_bar,
        },
        "identities": {
            "index_difference": index_report.eq_index_difference,
            "mod2_summed": index_report.eq_mod2_summed,
            "mod2_g": index_report.eq_mod2_g,
            "sign_transfer": index_report.eq_sign_transfer,
            "sigma_transfer": index_report.eq_sigma_transfer,
            "symmetry_block_index": index_report.eq_symmetry_block_index,
        },
        "reduced_hill_residual": checked(index_report.reduced_hill_residual, 1e-8),
        "factorization_residual": checked(index_report.factorization_residual, 1e-8),
        "orthogonality_defect": checked(index_report.orthogonality_defect, 1e-9),
        "conjugate_full_defect": checked(index_report.conjugate_full_defect, 1e-9),
        "conjugate_reduced_defect": checked(index_report.conjugate_reduced_defect, 1e-9),
    }
    if rho_reports:
        payload["rho_checks"] = [
            {
                "rho": _c(r.rho),
                "lemma_residual": checked(r.lemma_residual, 1e-9),
                "display_residual": checked(r.display_residual, 1e-9),
                "index_congruence": r.index_congruence,
                "nullity_match": r.nullity_match,
            }
            for r in rho_reports
        ]
    return payload


def reversible_payload(rev, verdicts):
    if rev is None:
        return None
    return {
        "tau_type": rev.tau_type,
        "half_count": rev.half_count,
        "anchors": list(rev.anchors),
        "shift_applied": rev.shift_applied,
        "is_minimum": verdicts.is_minimum,
        "c_first_nonpositive": verdicts.c_first_nonpositive,
        "c_last_nonpositive": verdicts.c_last_nonpositive,
        "predicted_real_multiplier_gt1": verdicts.predicted_real_multiplier_gt1,
        "predicted_hyperbolic": verdicts.predicted_hyperbolic,
        "index_split_consistent": verdicts.index_split_consistent,
        "det_split_residual": checked(verdicts.det_split_residual, 1e-8),
        "min_unit_circle_gap": verdicts.min_unit_circle_gap,
        "notes": list(verdicts.notes),
    }


def continuous_payload(results, indices=None, identity_tol=1e-6):
    rows = []
    for res in results:
        rows.append(
            {
                "rho": _c(res.rho),
                "lhs": _c(res.lhs),
                "rhs_extrapolated": _c(res.rhs_extrapolated),
                "residual": checked(res.residual, identity_tol),
                "ladder": list(res.ladder),
                "dets": [_c(d) for d in res.dets],
                "raw_residuals": [float(r) for r in res.raw_residuals],
            }
        )
    payload = {
        "schema_version": 1,
        "kind": "continuous_report",
        "sigma": results[0].sigma if results else None,
        "beta": results[0].beta if results else None,
        "rows": rows,
        "max_residual": checked(max((r.residual for r in results), default=0.0), identity_tol),
    }
    if indices is not None:
        payload["rho_indices"] = [
            {"rho": _c(rho), "index": idx, "nullity": nul} for rho, (idx, nul) in indices
        ]
    return payload


def _coerce(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def to_json(payload):
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=True, default=_coerce) + "\n"


def write_json(path, payload):
    with open(path, "w", encoding="ascii") as handle:
        handle.write(to_json(payload))


def rho_grid_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "rho_re",
            "rho_im",
            "det_monodromy_re",
            "det_monodromy_im",
            "det_hessian_re",
            "det_hessian_im",
            "residual",
            "jointly_degenerate",
        ]
    )
    for rho, lhs, rhs, res, deg in zip(
        report.rho_grid,
        report.det_monodromy_side,
        report.det_hessian_side,
        report.residuals,
        report.jointly_degenerate,
    ):
        writer.writerow(
            [
                repr(rho.real),
                repr(rho.imag),
                repr(lhs.real),
                repr(lhs.imag),
                repr(rhs.real),
                repr(rhs.imag),
                repr(res),
                int(deg),
            ]
        )
    return buf.getvalue()


def convergence_csv(results):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rho_re", "rho_im", "order", "det_re", "det_im", "raw_residual"])
    for res in results:
        for order, det, raw in zip(res.ladder, res.dets, res.raw_residuals):
            writer.writerow(
                [
                    repr(res.rho.real),
                    repr(res.rho.imag),
                    order,
                    repr(det.real),
                    repr(det.imag),
                    repr(raw),
                ]
            )
        writer.writerow(
            [
                repr(res.rho.real),
                repr(res.rho.imag),
                "extrapolated",
                repr(res.rhs_extrapolated.real),
                repr(res.rhs_extrapolated.imag),
                repr(res.residual),
            ]
        )
    return buf.getvalue()


def write_text(path, text):
    with open(path, "w", encoding="ascii") as handle:
        handle.write(text)


def report_to_csv(payload):
    """Flatten a JSON report into a two-column key,value table."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["key", "value"])

    def walk(prefix, node):
        if isinstance(node, dict):
            for key in sorted(node):
                walk(f"{prefix}{key}/", node[key])
        elif isinstance(node, list):
            for idx, item in enumerate(node):
                walk(f"{prefix}{idx}/", item)
        else:
            writer.writerow([prefix.rstrip("/"), node])

    walk("", payload)
    return buf.getvalue()
