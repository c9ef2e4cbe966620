"""Compose a behavior nobody demonstrated: pouring, from five relabeled skills.

The trick of the whole system: once demonstrations are relabeled at the
skill level, new tasks are just new sequences of old skills. Pouring is a
side grasp (so the cup can tilt), a lift, a tilt out, a tilt back, and a
place -- five open-loop commands.
"""

from steer.dsl import parse_plan, render_language
from steer.instructions import parse_instruction
from steer.orchestrator import CANONICAL_POUR_PROGRAM, execute_plan, validate_plan
from steer.segmenter import segment_episode
from steer.sim import SimSession, synth_episode

plan = parse_plan(CANONICAL_POUR_PROGRAM)
print("the pour program:")
for call in plan.calls:
    print(f"  {call.render():42s} -> {render_language(call)!r}")

# Lint first (ordering, object names), then run open-loop in the simulator.
session = SimSession("single_cup", seed=0)
report = validate_plan(plan, session.scene)
print(f"\nvalidation: {len(report.errors)} errors, {len(report.warnings)} warnings")

log = execute_plan(plan, session)
print("\nexecution log:")
for entry in log:
    cup = entry.scene["objects"]["pink cup"]
    state = f"orientation={cup['orientation']}, held={cup['held']}"
    print(f"  [{entry.call_index}] {'ok ' if entry.success else 'FAIL'} "
          f"{entry.instruction:45s} {state}")

cup = session.scene.objects["pink cup"]
print(f"\nfinal: {cup.orientation_class}, held={cup.held}, "
      f"z={float(cup.position[2]):.2f} (table at {session.scene.table_height})")

# The same five skills, synthesized as a demonstration, relabel right back
# into grasp / reorient / reorient / place -- the loop is closed.
episode = synth_episode("place pink cup upright", list(plan.calls), seed=3,
                        episode_id="pour-demo")
segments = segment_episode(episode, parse_instruction(episode.instruction)).segments
print("\nthe same motion, relabeled from raw proprioception:")
for seg in segments:
    print(f"  [{seg.start_index:3d}, {seg.end_index:3d}]  {seg.rendered_instruction}")
