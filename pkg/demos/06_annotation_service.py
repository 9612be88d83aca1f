"""Annotation service walkthrough
================================

The loop publishes a batch, annotators claim tasks under leases, submit
topic/opinion labels (or create brand-new opinions), and the service
writes everything back to the ontology store. Double-coding mode sends
every task to two coders and measures their exact-match agreement.

This runs the wire protocol in-process; `opinionmap serve` exposes the
same endpoints over HTTP for the browser UI.
"""

from datetime import datetime, timezone

from fastapi.testclient import TestClient

from opinionmap import AnnotationService, OntologyStore
from opinionmap.webapi import create_app

store = OntologyStore()
store.add_topic("climate-change", "Climate change")
store.add_topic("covid-19", "COVID-19")
store.add_opinion("o-unhoax", "Climate change is a UN hoax", {"climate-change"},
                  conspiracy=True)
ts = datetime(2020, 9, 1, tzinfo=timezone.utc)
for i in range(6):
    store.add_posting(f"p{i}", f"posting number {i} about masks or climate",
                      "facebook", ts)

service = AnnotationService(store, lease_seconds=1800, double_coding=True)
api = TestClient(create_app(service))

batch = [{"topic": "climate-change", "posting_id": f"p{i}", "strategy": "active",
          "score": 0.5 - i * 0.02} for i in range(6)]
resp = api.post("/v1/iterations/1/batch", json={"selections": batch})
print(f"published {len(resp.json()['task_ids'])} tasks for iteration 1")

task = api.get("/v1/tasks/next", params={"annotator": "coder-a"}).json()["task"]
print("\ncoder-a claimed:", task["task_id"])
print("payload keys:", sorted(task))
print("note: no scores, no predictions anywhere in the payload")

resp = api.post(f"/v1/tasks/{task['task_id']}/labels", json={
    "annotator_id": "coder-a",
    "topics": ["climate-change", "covid-19"],
    "opinions": ["o-unhoax"],
    "new_opinions": [{"statement": "Covid-19 is a plague sent by God",
                      "topic_ids": ["covid-19"], "conspiracy": True}],
})
body = resp.json()
print(f"\nsubmission accepted: state={body['task_state']}, "
      f"{body['triples_written']} triples written, "
      f"created {body['opinions_created']}")

# double-coding: the same task reopens for a second coder
for coder in ("coder-a", "coder-b"):
    while True:
        claimed = api.get("/v1/tasks/next", params={"annotator": coder}).json()["task"]
        if claimed is None:
            break
        api.post(f"/v1/tasks/{claimed['task_id']}/labels", json={
            "annotator_id": coder,
            "topics": ["climate-change"],
            "opinions": ["o-unhoax"],
        })

progress = api.get("/v1/iterations/1/progress").json()
print("\nprogress:", progress["counts"])
agreement = service.agreement(1, "coder-a", "coder-b")
print(f"exact-match agreement between the two coders: {agreement:.2f}")

print("\nopinion vocabulary now visible to the UI picker:")
for op in api.get("/v1/opinions").json()["opinions"]:
    print(f"  {op['id']}: {op['statement']!r} ({', '.join(op['topic_ids'])})")
