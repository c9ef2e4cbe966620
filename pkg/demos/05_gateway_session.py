"""Drive a live session over the wire: HTTP commands in, websocket frames out.

This is exactly what the browser console does: create a session, subscribe
to its event stream, post skills and plans, and mark the outcome so the
program joins the planner memory.
"""

import json
import threading
import urllib.request

from steer.gateway import serve
from steer.orchestrator import CANONICAL_POUR_PROGRAM
from steer.ws import WSClient

server = serve(port=0)
threading.Thread(target=server.serve_forever, daemon=True).start()
port = server.server_address[1]
print(f"gateway on 127.0.0.1:{port}")


def post(path, body):
    req = urllib.request.Request(f"http://127.0.0.1:{port}{path}",
                                 data=json.dumps(body).encode(),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read().decode())


created = post("/sessions", {"scenario": "single_cup", "seed": 0})
sid = created["session_id"]
print(f"session {sid}: objects {list(created['state']['objects'])}")

# Subscribe before acting: the stream delivers one frame per trajectory step.
stream = WSClient("127.0.0.1", port, f"/sessions/{sid}/stream")

result = post(f"/sessions/{sid}/skill",
              {"name": "grasp", "object": "pink cup", "modifier": "side"})
print(f"\nskill -> {result['instruction']!r}, success={result['outcome']['success']}")

frames = [json.loads(stream.recv_text()) for _ in range(25)]
z_path = [round(f["scene"]["gripper"]["position"][2], 3) for f in frames[::6]]
print(f"streamed {len(frames)} frames; gripper z along the way: {z_path}")

# Validate-then-execute the rest of the pour as a program.
rest = 'lift("pink cup") reorient("pink cup", "horizontal") ' \
       'reorient("pink cup", "upright") place("pink cup")'
check = post(f"/sessions/{sid}/plan", {"program": rest, "mode": "validate_only"})
print(f"\nvalidate_only: {check}")
run = post(f"/sessions/{sid}/plan", {"program": rest, "mode": "execute"})
print(f"executed {len(run['log'])} calls; "
      f"cup now {run['state']['objects']['pink cup']['orientation']}")

# A success label routes the program into planner memory for next time.
post(f"/sessions/{sid}/outcome", {"task": "pour from the pink cup", "succeeded": True})
remembered = server.gateway.memory.retrieve("pour from the pink cup", 1)
print(f"\nmemory now holds {len(remembered)} program(s) for the pour task")

stream.close()
server.shutdown()
server.server_close()
