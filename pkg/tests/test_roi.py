"""ROI metric against an independent single-pass recomputation oracle."""

import random

import pytest

from ihpc import errors
from ihpc.roi import (BenefitEntry, RoiLedger, compute_roi,
                      estimate_serial_time, ingest_sim, laboratory_fixture)
from ihpc.sched import Discipline, PolicyConfig, SimJob, simulate


def oracle_roi(ledger):
    """Independent recomputation: one literal pass over the raw fields."""
    benefit = 0.0
    for e in ledger.benefit_entries:
        saved = e.serial_time_hours - e.parallel_wall_hours
        if saved > 0:
            benefit += saved * ledger.staff_rate
    cost = ((ledger.parallelize_hours + ledger.training_hours +
             ledger.launch_overhead_hours + ledger.admin_hours)
            * ledger.staff_rate + ledger.system_cost_currency)
    return benefit / cost, benefit, cost


def random_ledger(rng):
    ledger = RoiLedger(
        staff_rate=rng.uniform(10, 500),
        parallelize_hours=rng.uniform(0, 1000),
        training_hours=rng.uniform(0, 1000),
        launch_overhead_hours=rng.uniform(0, 100),
        admin_hours=rng.uniform(1, 5000),
        system_cost_currency=rng.uniform(0, 5e6),
    )
    for _ in range(rng.randrange(0, 50)):
        ledger.benefit_entries.append(BenefitEntry(
            user=f"u{rng.randrange(20)}",
            serial_time_hours=rng.uniform(0, 500),
            parallel_wall_hours=rng.uniform(0, 100)))
    return ledger


class TestEstimateSerialTime:
    def test_linear_scaling(self):
        assert estimate_serial_time(10, 16, 1.0) == pytest.approx(160)

    def test_single_core_no_benefit(self):
        assert estimate_serial_time(10, 1, 1.0) == pytest.approx(10)

    def test_half_efficiency(self):
        assert estimate_serial_time(2, 32, 0.5) == pytest.approx(32)

    def test_bad_efficiency(self):
        with pytest.raises(errors.ArgumentError):
            estimate_serial_time(1, 4, 0.0)
        with pytest.raises(errors.ArgumentError):
            estimate_serial_time(1, 4, 1.5)


class TestComputeRoi:
    def test_simple_ratio(self):
        ledger = RoiLedger(staff_rate=1.0, admin_hours=30.0)
        ledger.benefit_entries.append(
            BenefitEntry(user="a", serial_time_hours=100.0, parallel_wall_hours=10.0))
        assert compute_roi(ledger).roi == pytest.approx(3.0)

    def test_all_zero_benefit(self):
        ledger = RoiLedger(staff_rate=1.0, admin_hours=1.0)
        ledger.benefit_entries.append(
            BenefitEntry(user="a", serial_time_hours=1.0, parallel_wall_hours=1.0))
        assert compute_roi(ledger).roi == 0.0

    def test_zero_cost_rejected(self):
        with pytest.raises(errors.ArgumentError):
            compute_roi(RoiLedger(staff_rate=1.0))

    def test_breakdown_itemizes_five_categories(self):
        ledger = RoiLedger(staff_rate=2.0, parallelize_hours=1, training_hours=2,
                           launch_overhead_hours=3, admin_hours=4,
                           system_cost_currency=5)
        result = compute_roi(ledger)
        assert result.breakdown == {
            "parallelize_currency": 2.0, "training_currency": 4.0,
            "launch_currency": 6.0, "admin_currency": 8.0,
            "system_cost_currency": 5.0}
        assert result.cost_currency == pytest.approx(25.0)

    def test_matches_oracle_on_random_ledgers(self):
        rng = random.Random(11)
        for _ in range(200):
            ledger = random_ledger(rng)
            result = compute_roi(ledger)
            expect_roi, expect_benefit, expect_cost = oracle_roi(ledger)
            assert result.roi == pytest.approx(expect_roi, rel=1e-9)
            assert result.benefit_currency == pytest.approx(expect_benefit, rel=1e-9)
            assert result.cost_currency == pytest.approx(expect_cost, rel=1e-9)

    def test_laboratory_fixture_in_band(self):
        result = compute_roi(laboratory_fixture())
        assert 2.0 <= result.roi <= 10.0


class TestProperties:
    def test_rate_scale_invariance(self):
        rng = random.Random(5)
        ledger = random_ledger(rng)
        ledger.benefit_entries.append(
            BenefitEntry(user="x", serial_time_hours=50, parallel_wall_hours=1))
        base = compute_roi(ledger)
        c = 3.7
        scaled = RoiLedger(
            staff_rate=ledger.staff_rate * c,
            benefit_entries=list(ledger.benefit_entries),
            parallelize_hours=ledger.parallelize_hours,
            training_hours=ledger.training_hours,
            launch_overhead_hours=ledger.launch_overhead_hours,
            admin_hours=ledger.admin_hours,
            system_cost_currency=ledger.system_cost_currency * c)
        result = compute_roi(scaled)
        assert result.roi == pytest.approx(base.roi, rel=1e-12)
        assert result.benefit_currency == pytest.approx(base.benefit_currency * c)

    def test_monotonicity(self):
        ledger = RoiLedger(staff_rate=1.0, admin_hours=10.0)
        ledger.benefit_entries.append(
            BenefitEntry(user="a", serial_time_hours=20, parallel_wall_hours=2))
        base = compute_roi(ledger).roi
        ledger.benefit_entries.append(
            BenefitEntry(user="b", serial_time_hours=5, parallel_wall_hours=1))
        assert compute_roi(ledger).roi > base
        more = compute_roi(ledger).roi
        ledger.training_hours += 5.0
        assert compute_roi(ledger).roi < more

    def test_benefit_floor_at_zero(self):
        ledger = RoiLedger(staff_rate=1.0, admin_hours=1.0)
        ledger.benefit_entries.append(
            BenefitEntry(user="a", serial_time_hours=1.0, parallel_wall_hours=10.0))
        ledger.benefit_entries.append(
            BenefitEntry(user="b", serial_time_hours=5.0, parallel_wall_hours=1.0))
        # The slowdown job contributes 0, not -9.
        assert compute_roi(ledger).benefit_currency == pytest.approx(4.0)


class TestIngestSim:
    def test_single_job_composition(self):
        policy = PolicyConfig(total_cores=128)
        out = simulate(policy, [SimJob("j", "a", 4, 3600.0, 0.0)],
                       Discipline.ON_DEMAND)
        ledger = RoiLedger(staff_rate=100.0, admin_hours=1.0)
        ingest_sim(out, ledger, efficiency=1.0)
        entry = ledger.benefit_entries[0]
        assert entry.serial_time_hours == pytest.approx(4.0)
        # wall = 0 wait + 5.1 s latency + 3600 s service
        assert entry.parallel_wall_hours == pytest.approx(3605.1 / 3600.0)
        assert ledger.launch_overhead_hours == pytest.approx(5.1 / 3600.0)

    def test_empty_outcome(self):
        policy = PolicyConfig(total_cores=128)
        out = simulate(policy, [], Discipline.ON_DEMAND)
        ledger = RoiLedger(staff_rate=100.0, admin_hours=1.0)
        ingest_sim(out, ledger)
        assert ledger.benefit_entries == []
        assert ledger.launch_overhead_hours == 0.0

    def test_flood_fixture_positive_benefit(self):
        policy = PolicyConfig(total_cores=128)
        jobs = [SimJob(f"f{i}", "alice", 16, 1000.0, 0.0) for i in range(10)]
        out = simulate(policy, jobs, Discipline.ON_DEMAND)
        ledger = RoiLedger(staff_rate=100.0, admin_hours=1.0)
        ingest_sim(out, ledger)
        result = compute_roi(ledger)
        assert result.benefit_currency > 0
        expect_roi, _, _ = oracle_roi(ledger)
        assert result.roi == pytest.approx(expect_roi, rel=1e-9)


class TestLedgerFile:
    def test_save_load_round_trip(self, tmp_path):
        ledger = laboratory_fixture(n_users=10)
        path = tmp_path / "ledger.json"
        ledger.save(path)
        loaded = RoiLedger.load(path)
        assert loaded.to_dict() == ledger.to_dict()
        assert compute_roi(loaded).roi == pytest.approx(compute_roi(ledger).roi)
