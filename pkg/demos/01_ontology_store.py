"""Ontology store basics
=======================

Build a tiny ontology of topics, opinions and postings, connect them with
triples, query with wildcards, and watch what merging two opinions does to
the label matrix.
"""

from opinionmap import OntologyStore

store = OntologyStore()

# the four study topics are predetermined; opinions emerge from coding
store.add_topic("climate-change", "Climate change")
store.add_topic("covid-19", "COVID-19")

store.add_opinion("o-unhoax", "Climate change is a UN hoax", {"climate-change"},
                  conspiracy=True)
store.add_opinion("o-notreal", "Climate change crisis isn't real", {"climate-change"})

store.add_place("pl-group", "facebook", "groups/example-discussion")
for i, text in enumerate([
    "the climate hoax continues, wake up",
    "climate change isn't real, it never was",
    "bought a new umbrella today",
]):
    store.add_posting(f"p{i}", text, "facebook", "2020-01-10T09:00:00Z",
                      place_id="pl-group")

# labeling writes triples; an empty topic set is an explicit off-topic label
store.label_posting("p0", ["climate-change"], ["o-unhoax"])
store.label_posting("p1", ["climate-change"], ["o-notreal"])
store.label_posting("p2", [])

print("all triples:")
for s, p, o in store.query():
    print(f"  {s} --{p}--> {o}")

print("\npostings expressing any opinion of climate-change:")
for s, _, o in store.query(None, "expresses_opinion", None):
    print(f"  {s} expresses {store.opinion(o).statement!r}")

print("\ntopics of p0 (derived through its opinion):", store.query_topics("p0"))

print("\nlabel matrix before merge:")
print(store.export_label_matrix())

# the two statements turn out to be the same idea: merge them
store.merge_opinions("o-notreal", "o-unhoax")
print("label matrix after merging the hoax opinion into its sibling:")
print(store.export_label_matrix())

print("merged opinion status:", store.opinion("o-unhoax").status,
      "->", store.opinion("o-unhoax").merged_into)
