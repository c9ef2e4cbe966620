"""Planners: scene summaries in, programs out, successful programs remembered.

A planner sees the system prompt, a textual scene summary, the task, and any
previously successful programs for that task. This demo uses the scripted
planner (a lookup table) plus a deliberately flaky fake "remote" planner to
show the retry-with-feedback loop and the self-improvement memory.
"""

from steer.orchestrator import (
    PlannerMemory,
    ScriptedPlanner,
    build_planner_request,
    execute_plan,
    propose_plan,
    scene_summary,
)
from steer.sim import SimSession

TASK = "pour from the pink cup"

session = SimSession("single_cup", seed=0)
print("what a planner sees:")
print(scene_summary(session.scene))

memory = PlannerMemory()
request = build_planner_request(TASK, session.scene, memory)
print(f"\ntask: {request.task!r}, examples on first attempt: {request.examples}")

plan = propose_plan(ScriptedPlanner(), request, session.scene)
log = execute_plan(plan, session)
succeeded = all(entry.success for entry in log)
print(f"scripted planner produced {len(plan)} calls; execution success: {succeeded}")

# A human labels the outcome; the program becomes an in-context example.
memory.record(TASK, plan.source_text, succeeded)
request2 = build_planner_request(TASK, session.scene, memory)
print(f"examples on the next attempt: {len(request2.examples)} "
      f"(first line: {request2.examples[0].splitlines()[0]!r})")


class FlakyPlanner:
    """Returns a bad modifier once, then corrects itself."""

    def __init__(self, good_program):
        self.calls = 0
        self.good_program = good_program

    def propose(self, request):
        self.calls += 1
        if self.calls == 1:
            return 'grasp("pink cup", "sideways")'  # invalid modifier
        print(f"  retry prompt carries the error: "
              f"{request.task.splitlines()[-1][:70]}...")
        return self.good_program


flaky = FlakyPlanner(plan.source_text)
fresh = SimSession("single_cup", seed=1)
plan2 = propose_plan(flaky, build_planner_request(TASK, fresh.scene, memory), fresh.scene)
print(f"\nflaky planner needed {flaky.calls} attempts; final plan has {len(plan2)} calls")
