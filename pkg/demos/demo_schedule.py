"""Scale-schedule bookkeeping for the induction on scales.

delta_k = delta_0^(alpha^k) runs until delta_k^(alpha+beta') <= mu; each step
multiplies the working constant by (1 + delta_k^beta) exp(sigma delta_k^beta).
The demo prints the canonical schedule, then inverts the loss budget to find
the coarsest admissible starting scale.  Run:  python3 demos/demo_schedule.py
"""

import math

from blscales.scheduler import (
    ScheduleParams,
    accumulated_factor,
    choose_delta0,
    final_bound,
    kappa_evolution,
    schedule,
    total_loss_factor,
)

p = ScheduleParams(alpha=1.5, beta=0.3, beta_prime=0.4, delta0=0.1, mu=1e-10)
deltas, k_star = schedule(p)
kappas = kappa_evolution(p, k_star, 1.0)
print(f"alpha={p.alpha} beta={p.beta} beta'={p.beta_prime} "
      f"delta0={p.delta0} mu={p.mu}")
print(f"k* = {k_star} (first k with delta_k^(alpha+beta') <= mu)")
print("  k   delta_k        kappa_k")
for k, d in enumerate(deltas):
    print(f"  {k}   {d:<12.6e} {kappas[min(k, len(kappas) - 1)]:.9f}")

prod, log_bound = accumulated_factor(p, k_star)
print(f"accumulated factor  {prod:.15f}")
print(f"log upper bound     {log_bound:.15f}  (log factor {math.log(prod):.15f})")
print()

print("coarsest delta0 whose total loss stays within 1 + epsilon (sigma = 2):")
for eps in (0.5, 0.1, 0.01):
    d0 = choose_delta0(eps, 2.0, 1.5, 0.3)
    print(f"  epsilon {eps:<5g} delta0 {d0:.3e} "
          f"loss {total_loss_factor(d0, 1.5, 0.3, 2.0):.9f}")
print()
print(f"near-extremal multiplicative budget (1+eps)^(sigma+3) at eps=0.01: "
      f"{final_bound(0.01, 2.0):.9f}")
