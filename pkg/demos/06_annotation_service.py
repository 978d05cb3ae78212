# The HTTP annotation service, driven by a scripted client.
#
# The pipeline blocks at each annotation stage until the session is fully
# decided; here a loop plays the human, pulling candidates from
# /api/session/next and posting accept decisions, exactly what the browser
# UI does with the A/R keys.

import tempfile
import time
from pathlib import Path

import requests

from ruleboost.pipeline import load_config
from ruleboost.service import AnnotationServer
from ruleboost.synthetic import make_synthetic_task, write_config, write_task

workdir = Path(tempfile.mkdtemp(prefix="ruleboost-service-"))
task = make_synthetic_task(seed=1, n_clean=60, n_unlabeled=500, n_dev=60, n_test=200)
write_task(task, workdir)
cfg_path = write_config(
    task, workdir, checkpoint_dir=str(workdir / "run"), seed=1,
    iterations=2, top_n=4, candidates_per_instance=5, budget=20, annotators=1,
    http={"host": "127.0.0.1", "port": 0, "session_timeout": 120},
)

server = AnnotationServer(load_config(cfg_path))
server.start()
base = f"http://127.0.0.1:{server.port}"
print("service at", base)

while True:
    summary = requests.get(f"{base}/api/session").json()
    if summary.get("finished"):
        break
    if not summary.get("active"):
        time.sleep(0.05)
        continue
    nxt = requests.get(f"{base}/api/session/next", params={"annotator": "a1"}).json()
    if nxt.get("done"):
        time.sleep(0.05)
        continue
    print(f"iter {nxt['iteration']}  {nxt['rule_text']}")
    requests.post(
        f"{base}/api/session/decision",
        json={"rule_id": nxt["rule_id"], "annotator": "a1",
              "decision": "accept", "latency_ms": 1500.0},
    )
    progress = requests.get(f"{base}/api/session/progress").json()
    if progress["expected"] and progress["decided"] == progress["expected"]:
        print(f"  session complete ({progress['decided']}/{progress['expected']})")

reports = server.join()
print("\naccepting everything blindly still moves the numbers:")
for r in reports:
    print(f"  iter {r.iteration}: coverage={r.coverage:.3f} "
          f"test={r.ensemble_accuracy_test:.3f}")
