"""Cost amortization: when is learning-and-storing worth it?

Uses the analytic cost model directly, then feeds it parameters estimated
from an actual benchmark run (reuse probability from the post-first-repeat
hit rate, reuse occasions from the repeat count).
"""

from reuseloop import (
    CostProfile,
    MethodLibrary,
    aggregate,
    benefit_condition_holds,
    delay_comparison,
    expected_task_cost,
    reuse_benefit,
    run_loop,
    single_task_cost,
)
from reuseloop.config import RunConfig, build_corpus, build_planner, resolve_executor
from reuseloop.engine import PROPOSED

profile = CostProfile(
    c_retrieve=0.01, c_exec=6.0, c_plan=1.5, c_collect=0.5,
    c_train=0.3, c_store=0.05, c_delay=2.0,
)

print("=== single-task cost ===")
print(f"reuse mode    (z=0): {single_task_cost(profile, z=False):.2f} s")
print(f"learning mode (z=1): {single_task_cost(profile, z=True):.2f} s")

print("\n=== expected cost as coverage grows ===")
for p in (0.0, 0.25, 0.5, 0.75, 1.0):
    print(f"  p={p:.2f}: {expected_task_cost(profile, p):.3f} s")

print("\n=== the reuse-benefit condition ===")
for rho, k in ((1.0, 4), (0.5, 4), (1.0, 1), (0.2, 30)):
    result = reuse_benefit(profile, rho, k)
    verdict = "pays off" if benefit_condition_holds(profile, rho, k) else "does not pay off"
    print(
        f"  rho={rho:.1f} k={k:>2}: saves {result.b_reuse:6.2f} vs investment "
        f"{result.investment:.2f} -> b_net {result.b_net:6.2f} ({verdict})"
    )

print("\n=== quasi-real-time vs delayed updating ===")
for quasi in (0.0, 0.5, 2.0):
    comparison = delay_comparison(profile, quasi)
    print(
        f"  quasi delay {quasi:.1f}: {comparison.quasi_total:.2f} s"
        f" vs delayed {comparison.delayed_total:.2f} s"
    )

print("\n=== parameters estimated from a benchmark run ===")
config = RunConfig(seed=7, mode=PROPOSED)
events = build_corpus(config)
executor = resolve_executor(config, events)
records = run_loop(
    events, PROPOSED, MethodLibrary(), build_planner(config), config.thresholds, executor
)
pm = aggregate(records).policies[PROPOSED]
later = [r for r in records if r.repeat_index > 1]
rho_hat = sum(r.hit for r in later) / len(later)
k_hat = config.n_repeats - 1
run_profile = CostProfile(
    c_retrieve=executor.retrieve_s,
    c_plan=1.4565,
    c_collect=executor.collect_s,
    c_train=executor.train_s,
    c_store=executor.store_s,
    c_exec=pm.per_repeat[2].avg_total_s - executor.retrieve_s,
)
result = reuse_benefit(run_profile, rho_hat, k_hat)
print(f"estimated rho={rho_hat:.2f}, K={k_hat}")
print(f"net benefit per learned method: {result.b_net:.3f} s")
print(f"condition holds: {benefit_condition_holds(run_profile, rho_hat, k_hat)}")
