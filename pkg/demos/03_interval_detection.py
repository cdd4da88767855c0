"""Content-adaptive temporal intervals.

Two contrasting videos, same detector settings:

  (a) three static scenes separated by hard cuts -- the cuts must be found;
  (b) one smoothly panning scene with large frame-to-frame change -- no cut
      should be reported, because the change is sustained, not abrupt.
"""

from kitoke import RetentionConfig, detect_boundaries, frame_diff
from kitoke.synth import generate_scenes, random_scene_script

cfg = RetentionConfig(gamma=0.5, tau_diff=2.0, tau_dev=1.5, tau_rel=3.0)

# (a) three scenes of near-duplicate frames with big jumps in between
script = random_scene_script(
    n_scenes=3, frames_per_scene=5, m_tokens=24, dims=32,
    center_scale=2.0, noise_sigma=0.02, seed=1,
)
tensor, truth = generate_scenes(script)
trace = frame_diff(tensor)
intervals = detect_boundaries(trace, cfg)

print("scene-cut video:")
print(f"  planted scene starts: {truth}")
print(f"  detected boundaries:  {list(intervals.boundaries)}")
print(f"  intervals: {intervals.intervals}")
print("  t  diff_total   dev      dev_rel")
for k in range(len(trace.diff_total)):
    mark = " <- cut" if (k + 1) in intervals.boundaries else ""
    print(f"  {k + 1:2d}  {trace.diff_total[k]:9.3f}  {trace.dev[k]:7.3f}  "
          f"{trace.dev_rel[k]:8.3f}{mark}")

# (b) drift only: the per-pair difference is sizable every single frame
script = random_scene_script(
    n_scenes=1, frames_per_scene=15, m_tokens=24, dims=32,
    center_scale=0.0, noise_sigma=0.02, drift_scale=0.5, seed=2,
)
tensor, _ = generate_scenes(script)
trace = frame_diff(tensor)
intervals = detect_boundaries(trace, cfg)

print("\ndrift-only video (sustained camera motion):")
print(f"  diff_total stays around {trace.diff_total.mean():.2f} "
      f"(min {trace.diff_total.min():.2f}) -- nonzero change everywhere")
print(f"  deviations stay near zero: max dev = {trace.dev.max():.3f}")
print(f"  detected boundaries: {list(intervals.boundaries)} "
      f"({len(intervals) - 1} cuts -- motion is not a transition)")
