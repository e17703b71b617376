"""How dynamic is traffic at the prefix level?

Walks through the dynamism toolbox on one synthetic week:

* coefficient of variation of each prefix's hourly series,
* hourly cores (smallest sets covering 95% of an hour),
* core presence intensity over the week,
* the burstiness score/index that flags rarely-core prefixes suddenly
  carrying a large hourly share.
"""

from prefixcast import (
    BurstSpec,
    SyntheticTraceSpec,
    TimeGrid,
    burstiness_summary,
    coefficient_of_variation,
    compute_core_profile,
    core_summary,
    cv_vs_volume_bins,
    icp_vs_volume_bins,
    synthesize_trace,
    synthetic_prefix,
)

grid = TimeGrid(start=0, bin_seconds=3600, bin_count=168)

# rank-400 hardly ever matters... except for two violent bursts
spec = SyntheticTraceSpec(
    prefix_count=600,
    zipf_s=1.0,
    noise=0.5,
    diurnal_amplitude=0.3,
    bursts=(BurstSpec(rank=400, hour=60, multiplier=3000.0),
            BurstSpec(rank=400, hour=61, multiplier=1500.0)),
    seed=7,
)
m = synthesize_trace(spec, grid)
profile = compute_core_profile(m, threshold=0.95)

# --- hourly cores -----------------------------------------------------
core = core_summary(profile, m)
print("core statistics (95% of each hour's volume):")
print(f"  average size : {core['avg_core_size']:8.1f} prefixes")
print(f"  avg % active : {core['avg_core_pct_of_active']:8.2f}%")
print(f"  maximum size : {core['max_core_size']:8d} prefixes")

# --- variation vs importance ------------------------------------------
print("\ncv by weekly-share bin (stable heavy hitters sit low):")
print(f"{'bin':>12} {'count':>6} {'mean cv':>9} {'median':>8}")
for s in cv_vs_volume_bins(m):
    if s.count:
        print(f"{s.label:>12} {s.count:6d} {s.mean:9.3f} {s.median:8.3f}")

print("\ncore presence intensity by weekly-share bin:")
print(f"{'bin':>12} {'count':>6} {'mean icp':>9} {'median':>8}")
for s in icp_vs_volume_bins(m, profile):
    if s.count:
        print(f"{s.label:>12} {s.count:6d} {s.mean:9.3f} {s.median:8.3f}")

# --- the bursty prefix stands out --------------------------------------
bursty = synthetic_prefix(400)
steady = synthetic_prefix(1)
print("\nper-prefix view:")
for p in (steady, bursty):
    cv = coefficient_of_variation(m.series(p))
    print(f"  {p}: cv={cv:7.2f}  icp={profile.intensity(p):5.3f}  "
          f"max beta={profile.beta[profile.index_of(p)].max():7.2f}")

burst = burstiness_summary(profile)
print("\nburstiness over the week:")
print(f"  mean BI : {burst['mean_bi']:8.2f}")
print(f"  max BI  : {burst['max_bi']:8.2f}")
print(f"  max beta: {burst['max_beta']:8.2f}")
peak = int(profile.bi.argmax()) + 1
print(f"  the spike lands at hour {peak}, as injected")
