"""Acceptance criteria.

Each test covers one numbered criterion at its stated tolerance and prints
a single pass/fail line (visible with ``pytest -s`` or in captured output).
Run the whole gate with::

    pytest tests/test_acceptance.py -v
"""

import math
import time
from fractions import Fraction
from itertools import product
from random import Random

import pytest

from csdd import formats
from csdd.circuit import enumerate_models, is_consistent, model_count
from csdd.fixtures import shared_node_fixture, squares_dataset, squares_fixture
from csdd.infer import (
    EXACT,
    POSSIBLY_OUTER,
    Query,
    brute_force_exact,
    lower_conditional,
    lower_marginal,
    map_query,
    marginal,
    robustness,
    strong_extension_oracle,
    upper_conditional,
    upper_marginal,
)
from csdd.learn import collect_counts, idm_estimate, ml_estimate
from csdd.params import CsddParams

from conftest import (
    brute_marginal,
    random_circuit,
    random_credal_instance,
    random_csdd_params,
    random_psdd_params,
    random_vtree,
)


def report(number: int, detail: str) -> None:
    print(f"[PASS] criterion {number:2d}: {detail}")


@pytest.fixture(scope="module")
def squares_model():
    fx = squares_fixture()
    counts = collect_counts(fx.circuit, squares_dataset())
    return fx, idm_estimate(fx.circuit, counts, 1.0), ml_estimate(fx.circuit, counts)


def test_criterion_01_evidence_lower_bound_regression(squares_model):
    fx, idm, _ = squares_model
    evidence = {1: False, 2: False, 3: False, 4: True}
    expected = float(Fraction(12, 32) * Fraction(31, 101))
    value = lower_marginal(fx.circuit, idm, evidence)
    assert abs(value - expected) <= 1e-9
    best = min(
        _timed(lambda: lower_marginal(fx.circuit, idm, evidence)) for _ in range(20)
    )
    assert best < 1e-3, f"query took {best * 1e3:.3f} ms"
    report(1, f"lower probability {value:.9f} == 12/32 * 31/101 in {best * 1e6:.0f} us")


def _timed(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def test_criterion_02_interval_estimates_regression(squares_model):
    fx, idm, _ = squares_model
    expected = {
        (fx.root, 0): (Fraction(31, 101), Fraction(32, 101)),
        (fx.root, 1): (Fraction(52, 101), Fraction(53, 101)),
        (fx.right_when_white, 0): (Fraction(12, 32), Fraction(13, 32)),
        (fx.left_mixed, 0): (Fraction(39, 53), Fraction(40, 53)),
        (fx.right_when_mixed, 0): (Fraction(8, 53), Fraction(9, 53)),
        (fx.top_white, 0): (Fraction(5, 20), Fraction(6, 20)),
        (fx.top_mixed, 0): (Fraction(33, 45), Fraction(34, 45)),
    }
    for (nid, state), (lo, hi) in expected.items():
        cs = idm.table[nid]
        assert abs(cs.lower[state] - float(lo)) <= 1e-12
        assert abs(cs.upper[state] - float(hi)) <= 1e-12
    report(2, "all seven learned intervals match their exact rationals to 1e-12")


def test_criterion_03_zero_probability_characterization(squares_model):
    fx, idm, _ = squares_model
    models = enumerate_models(fx.circuit, fx.root)
    assert len(models) == 10
    for values in product((False, True), repeat=4):
        state = dict(zip((1, 2, 3, 4), values))
        lo = lower_marginal(fx.circuit, idm, state)
        hi = upper_marginal(fx.circuit, idm, state)
        if values in models:
            assert lo > 0.0, f"legal image {values} got zero lower probability"
        else:
            assert hi == 0.0, f"illegal image {values} got positive upper probability"
    report(3, "lower > 0 on exactly the 10 legal images, upper = 0 on the 6 others")


def test_criterion_04_degenerate_tables_collapse():
    rng = Random(2024_04)
    for i in range(100):
        n = rng.randint(2, 8)
        circuit = random_circuit(rng, n, singly=True)
        point = random_psdd_params(rng, circuit)
        degenerate = CsddParams.degenerate(point)
        evidence = {
            v: bool(rng.getrandbits(1)) for v in range(1, n + 1) if rng.random() < 0.5
        }
        reference = brute_marginal(circuit, point, evidence)
        assert abs(marginal(circuit, point, evidence) - reference) <= 1e-12
        assert abs(lower_marginal(circuit, degenerate, evidence) - reference) <= 1e-12
        assert abs(upper_marginal(circuit, degenerate, evidence) - reference) <= 1e-12
    report(4, "100 zero-width tables: bounds == point pass == enumeration within 1e-12")


@pytest.fixture(scope="module")
def singly_instances():
    rng = Random(2024_05)
    out = []
    while len(out) < 50:
        n = rng.randint(3, 6)
        circuit, params = random_credal_instance(
            rng, n, singly=True, max_width=0.2, max_elements=3, combo_cap=1500
        )
        out.append((circuit, params))
    return out


def test_criterion_05_oracle_equivalence_singly_connected(singly_instances):
    start = time.perf_counter()
    rng = Random(99)
    for circuit, params in singly_instances:
        n = circuit.vtree.var_count
        evidence, var = _query_setup(rng, circuit)
        # evidence bounds
        q = Query.make("marginal", evidence)
        assert abs(
            lower_marginal(circuit, params, evidence)
            - strong_extension_oracle(circuit, params, q, "min")
        ) <= 1e-6
        assert abs(
            upper_marginal(circuit, params, evidence)
            - strong_extension_oracle(circuit, params, q, "max")
        ) <= 1e-6
        # conditional bounds
        qc = Query.make("conditional", evidence, target=(var, True))
        lo = lower_conditional(circuit, params, var, True, evidence, tol=1e-6)
        hi = upper_conditional(circuit, params, var, True, evidence, tol=1e-6)
        assert abs(lo.value - strong_extension_oracle(circuit, params, qc, "min")) <= 1e-6
        assert abs(hi.value - strong_extension_oracle(circuit, params, qc, "max")) <= 1e-6
        assert lo.certificate.status == EXACT and hi.certificate.status == EXACT
        # robustness value
        member = params.select({})
        _, completion = map_query(circuit, member, evidence)
        xstar = {v: val for v, val in completion.items() if v not in evidence}
        verdict = robustness(circuit, params, evidence, xstar)
        qr = Query.make("robustness", evidence, xstar=xstar)
        assert abs(verdict.value - strong_extension_oracle(circuit, params, qr, "max")) <= 1e-6
        assert verdict.certificate.status == EXACT
    elapsed = time.perf_counter() - start
    assert elapsed < 120.0, f"criterion 5 took {elapsed:.1f} s"
    report(5, f"50 singly connected instances match the oracle (1e-6) in {elapsed:.1f} s")


def _query_setup(rng: Random, circuit):
    n = circuit.vtree.var_count
    models = sorted(enumerate_models(circuit, circuit.root))
    for _ in range(100):
        var = rng.randint(1, n)
        model = models[rng.randrange(len(models))]
        evidence = {
            v: model[v - 1] for v in range(1, n + 1) if v != var and rng.random() < 0.5
        }
        if is_consistent(circuit, {**evidence, var: True}) and is_consistent(
            circuit, {**evidence, var: False}
        ):
            return evidence, var
    return {}, 1


@pytest.fixture(scope="module")
def shared_structure_results():
    """Criterion 6/9 shared corpus: outer bounds plus brute-force refinements."""
    rng = Random(2024_06)
    rows = []
    while len(rows) < 30:
        circuit, params = random_credal_instance(
            rng, rng.randint(3, 6), singly=False, max_width=0.25, combo_cap=1500
        )
        evidence, var = _query_setup(rng, circuit)
        qc = Query.make("conditional", evidence, target=(var, True))
        res = lower_conditional(circuit, params, var, True, evidence, tol=1e-6)
        cond_oracle = strong_extension_oracle(circuit, params, qc, "min")
        member = params.select({})
        _, completion = map_query(circuit, member, evidence)
        xstar = {v: val for v, val in completion.items() if v not in evidence}
        qr = Query.make("robustness", evidence, xstar=xstar)
        verdict = robustness(circuit, params, evidence, xstar)
        rob_oracle = strong_extension_oracle(circuit, params, qr, "max")
        rows.append((circuit, params, qc, res, cond_oracle, qr, verdict, rob_oracle))
    return rows


def test_criterion_06_outer_bounds_on_shared_structure(shared_structure_results):
    flagged = 0
    for circuit, params, qc, res, cond_oracle, qr, verdict, rob_oracle in shared_structure_results:
        assert res.value <= cond_oracle + 1e-9
        assert verdict.value >= rob_oracle - 1e-9
        if res.certificate.status == EXACT:
            assert abs(res.value - cond_oracle) <= 1e-6
        else:
            flagged += 1
        if verdict.certificate.status == EXACT:
            assert abs(verdict.value - rob_oracle) <= 1e-6
        else:
            flagged += 1
    # the canonical shared-node example must flag its shared terminal
    fx = shared_node_fixture()
    params = fx.params(0.3, 0.8)
    res = lower_conditional(fx.circuit, params, 1, True, {3: True}, tol=1e-9)
    assert res.certificate.status == POSSIBLY_OUTER
    assert fx.shared_top in res.certificate.conflicted
    report(6, f"30 shared-structure instances stay outer; {flagged} flagged; "
              "canonical instance flags its shared terminal")


def test_criterion_07_conditional_trace_regression(squares_model):
    fx, idm, _ = squares_model
    evidence = {2: False, 3: False, 4: True}
    res = lower_conditional(fx.circuit, idm, 1, True, evidence, tol=1e-6)
    sigma = {k[1]: v for k, v in res.trace.sigma.items() if k[0] == fx.root}
    assert sigma[0] == ("upper", 13 / 32)
    assert sigma[1][0] == "lower"
    assert abs(sigma[1][1] - 484 / 795) <= 1e-12
    oracle = strong_extension_oracle(
        fx.circuit, idm, Query.make("conditional", evidence, target=(1, True)), "min"
    )
    assert abs(res.value - oracle) <= 1e-4
    # reported for comparison only: an earlier account of this query placed
    # the crossing near 0.657; the enumeration oracle arbitrates
    report(7, f"sibling bounds 13/32 and 484/795 reproduced; fixed point {res.value:.6f} "
              f"matches the oracle {oracle:.6f} (reference figure 0.657 not reproduced)")


def test_criterion_08_display_experiment_properties():
    from csdd.experiment import Scenario, run_cell

    start = time.perf_counter()
    seeds = range(20)

    def averages(p_f):
        det_acc, indet_acc, determinacy = [], [], []
        for seed in seeds:
            m = run_cell(Scenario(train_size=20, p_f=p_f, seed=seed))
            determinacy.append(m.determinacy)
            if not math.isnan(m.det_accuracy):
                det_acc.append(m.det_accuracy)
            if not math.isnan(m.indet_accuracy):
                indet_acc.append(m.indet_accuracy)
        mean = lambda xs: sum(xs) / len(xs)
        return mean(det_acc), mean(indet_acc), mean(determinacy)

    for p_f in (0.2, 0.3):
        det_acc, indet_acc, _ = averages(p_f)
        assert det_acc >= indet_acc, (
            f"pf={p_f}: determinate accuracy {det_acc:.3f} < indeterminate {indet_acc:.3f}"
        )
    _, _, determinacy_low_noise = averages(0.05)
    _, _, determinacy_high_noise = averages(0.4)
    assert determinacy_low_noise >= determinacy_high_noise
    elapsed = time.perf_counter() - start
    assert elapsed < 600.0, f"criterion 8 took {elapsed:.1f} s"
    report(8, f"80 display cells: easy/hard split and determinacy trend hold in {elapsed:.0f} s")


def test_criterion_09_brute_force_matches_oracle(shared_structure_results):
    refined_count = 0
    for circuit, params, qc, res, cond_oracle, qr, verdict, rob_oracle in shared_structure_results:
        if res.certificate.status == POSSIBLY_OUTER:
            refined = brute_force_exact(circuit, params, qc, res)
            assert abs(refined - cond_oracle) <= 1e-9
            refined_count += 1
        if verdict.certificate.status == POSSIBLY_OUTER:
            refined = brute_force_exact(circuit, params, qr, verdict)
            assert abs(refined.value - rob_oracle) <= 1e-9
            refined_count += 1
    fx = shared_node_fixture()
    params = fx.params(0.3, 0.8)
    q = Query.make("conditional", {3: True}, target=(1, True))
    res = lower_conditional(fx.circuit, params, 1, True, {3: True}, tol=1e-9)
    refined = brute_force_exact(fx.circuit, params, q, res)
    assert abs(refined - strong_extension_oracle(fx.circuit, params, q, "min")) <= 1e-9
    assert refined_count >= 1
    report(9, f"{refined_count} flagged queries refined to the oracle within 1e-9")


def test_criterion_10_format_round_trips():
    rng = Random(2024_10)
    total = 0
    for _ in range(40):  # 5 formats x 40 = 200 instances
        n = rng.randint(2, 10)
        vtree = random_vtree(rng, n)
        text = formats.dumps_vtree(vtree)
        assert formats.loads_vtree(text) == vtree
        assert formats.dumps_vtree(formats.loads_vtree(text)) == text
        total += 1

        circuit = random_circuit(rng, rng.randint(3, 6), singly=bool(rng.getrandbits(1)))
        sdd_text = formats.dumps_sdd(circuit)
        back = formats.loads_sdd(sdd_text, circuit.vtree)
        assert formats.dumps_sdd(back) == sdd_text
        assert model_count(back) == model_count(circuit)
        total += 1

        point = random_psdd_params(rng, circuit)
        psdd_text = formats.dumps_psdd(circuit, point)
        pc, pp = formats.loads_psdd(psdd_text, circuit.vtree)
        assert formats.dumps_psdd(pc, pp) == psdd_text
        total += 1

        credal = random_csdd_params(rng, circuit, 0.3)
        csdd_text = formats.dumps_csdd(circuit, credal)
        cc, cp = formats.loads_csdd(csdd_text, circuit.vtree)
        assert formats.dumps_csdd(cc, cp) == csdd_text
        total += 1

        width = rng.randint(1, 6)
        rows = [
            (tuple(bool(rng.getrandbits(1)) for _ in range(width)), rng.randint(1, 9))
            for _ in range(rng.randint(0, 8))
        ]
        from csdd.learn import Dataset

        dataset = Dataset(tuple(f"V{i}" for i in range(width)), rows)
        data_text = formats.dumps_dataset(dataset)
        back_ds = formats.loads_dataset(data_text)
        assert formats.dumps_dataset(back_ds) == data_text
        assert back_ds.rows == dataset.rows
        total += 1
    assert total == 200
    report(10, "200 randomized instances round-trip byte-identically across all formats")
