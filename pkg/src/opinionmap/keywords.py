"""Default keyword groups used for corpus ingestion.

The study topics pair up into two groups whose messaging overlaps heavily,
so keywords are curated per group. Both the group map and a flat per-topic
view are exposed; callers can always supply their own mapping instead.
"""

KEYWORD_GROUPS: dict[str, dict] = {
    "bushfires-climate-change": {
        "topics": ["bushfires", "climate-change"],
        "keywords": [
            "bushfire",
            "australian fires",
            "arson",
            "scottyfrommarketing",
            "liarfromtheshiar",
            "australiaburns",
            "australiaburning",
            "itsthegreensfault",
            "backburning",
            "back burning",
            "climate change",
            "climate mergency",
            "climate hoax",
            "climate crisis",
            "climate action now",
        ],
    },
    "covid-vaccination": {
        "topics": ["covid-19", "vaccination"],
        "keywords": [
            "covid",
            "coronavirus",
            "covid-19",
            "pandemic",
            "world health organization",
            "vaccine",
            "social distancing",
            "quarantine",
            "plandemic",
            "chinavirus",
            "wuhan",
            "stayhome",
            "MadeinChina",
            "ChinaLiedPeopleDied",
            "5G",
            "chinacentric",
        ],
    },
}

DEFAULT_TOPICS: dict[str, str] = {
    "bushfires": "2019-20 Australian bushfire season",
    "climate-change": "Climate change",
    "covid-19": "COVID-19",
    "vaccination": "Vaccination",
}


def group_keyword_map() -> dict[str, list[str]]:
    """Keyword sets keyed by group id (the ingestion-report granularity)."""
    return {gid: list(g["keywords"]) for gid, g in KEYWORD_GROUPS.items()}


def topic_keyword_map() -> dict[str, list[str]]:
    """Keyword sets expanded to each member topic of the group."""
    out: dict[str, list[str]] = {}
    for group in KEYWORD_GROUPS.values():
        for topic in group["topics"]:
            out[topic] = list(group["keywords"])
    return out
