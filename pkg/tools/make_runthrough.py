#!/usr/bin/env python3
"""Synthesize the demo corpus under tests/fixtures/runthrough/.

The corpus is built so that a default pipeline run over it lands on the
pinned reference numbers asserted in tests/test_acceptance.py: the
component-level aggregates (0.4618 from the component classifier, 0.817
from the cluster mass, 25/41 from the scripted zero-shot judge), the
crowd estimate 0.1068, and the final combined probability near 0.52333.

Two article families (a tight "relief" family and a diffuse "dispute"
family) fix the embedding geometry, which pins the cluster split, the
inverse-distance weights, and every per-article probability. Publication
ages are then the only free inputs; a two-variable least-squares solve
over the two scoring-group ages drives the recency-weighted aggregates
onto the targets exactly. Rerunning the script reproduces the fixture
byte for byte.
"""

import json
import os
import sys
import tempfile
from datetime import datetime, timedelta, timezone

import numpy as np
from scipy.optimize import least_squares

sys.path.insert(0, os.path.join(os.path.dirname(__file__), os.pardir, "src"))

from mercator.corpus import article_id_for
from mercator.embedding import cosine_similarity, stub_embed
from mercator.events import load_events
from mercator.kmeans import (TwoClusterKMeans, aggregate_mass, article_weight,
                             combine_weights, map_clusters_to_outcomes)
from mercator.pca import (ArticleScore, PcaOutcomeClassifier,
                          aggregate_scores, article_p_yes, recency_weight)
from mercator.pipeline import PipelineOptions, run_pipeline

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), os.pardir,
                           "tests", "fixtures", "runthrough")

AS_OF = datetime(2025, 11, 1, tzinfo=timezone.utc)
TAU = 0.75
TARGET_PCA = 0.4618
TARGET_KMEANS = 0.817

N_LABELED_YES = 25
N_LABELED_NO = 25
N_SCORING_YES = 20
N_SCORING_NO = 21
N_DROPPED = 14

# Topic vocabulary shared by every relevant article and the event summary.
TOPIC = """
tariff widget import export duty levy trade customs border refund rebate
quota shipment manufacturer supplier retailer wholesale pricing margin
inflation revenue commerce policy administration negotiation agreement
enforcement compliance exemption waiver rollback repeal relief deal brief
dispute filing ruling court treasury secretary statement announcement
reporter analyst economist forecast market
""".split()

# Markers anchoring the dispute family; never in TOPIC or the fillers.
DISPUTE_MARKERS = ["injunction", "blockade", "standoff"]

# Per-article filler words spreading the dispute family apart.
FILLERS = """
harbor ledger journal podium corridor lantern meadow granite timber copper
anchor beacon canvas cedar chapel cobalt crimson ember falcon garnet hammer
harvest hickory ivory jasper kennel lagoon magnet maple marble mirror
mosaic needle nickel orchard paddle pebble pillar quarry quiver rudder
saddle sapphire scarlet shingle silver spruce summit tannery thicket
trellis tunnel turbine velvet walnut willow zephyr amber basalt bramble
bronze cascade cavern chisel cinder compass coral crater current delta
dune estuary fjord flint fossil geyser glacier gorge grotto hollow iceberg
inlet island jungle knoll plateau prairie ravine reef ridge savanna slope
steppe strait tundra valley volcano cliff canyon mesa butte atoll bay cove
creek brook pond marsh swamp bog fen moor heath dale glen vale bluff crag
tor scree moraine drumlin esker kame terrace bank shoal bar spit lagoonal
""".split()

# Off-topic words for the candidates the relevance filter must drop.
OFF_TOPIC = """
stadium playoff goalkeeper marathon sprint javelin gymnast referee umpire
inning touchdown quarterback dribble rebound slalom regatta cyclist
peloton fairway birdie bogey wicket bowler batsman sunshine drizzle
thunder lightning blizzard heatwave monsoon humidity barometer orchestra
violin cello soprano ballet gallery sculpture fresco sonnet haiku novelist
librarian museum aquarium zoology botany telescope galaxy nebula comet
asteroid eclipse
""".split()

DROPPED_TOPIC_SUBSET = ["tariff", "widget", "import", "export", "duty",
                        "levy", "trade", "customs", "border", "refund",
                        "brief", "market", "policy", "deal"]

SOURCES = ["Global Wire", "Trade Daily", "Econ Monitor", "Policy Desk"]

EVENT = {
    "id": "widget-tariff-rollback",
    "statement": "Blanket tariffs on imported widgets will be rolled back "
                 "before the end of 2025.",
    "kind": "discrete",
    "resolution_date": "2025-12-31",
    "keywords": ["tariff", "widget"],
    "window": {"start": "2025-09-01", "end": "2025-10-31"},
    "summary_text": " ".join(TOPIC),
    "macro_p_yes": 0.56,
    "sna_weights": {"alpha": 0.5, "beta": 0.2, "gamma": 0.3},
    "ipf_weights": {"lstm": 0.0, "sna": 0.5, "crowd": 0.1, "macro": 0.4},
    "markets": {
        "proxies": [
            {"market_id": "tariff-refund", "weight": 0.21},
            {"market_id": "blanket-tariff", "weight": 0.20},
            {"market_id": "mexico-tariffs", "weight": 0.05},
        ],
    },
}

MARKETS = {
    "tariff-refund": {"p_yes": 0.13, "volume": 61230,
                      "resolution_date": "2025-12-31"},
    "blanket-tariff": {"p_yes": 0.19, "volume": 29074,
                       "resolution_date": "2025-12-31"},
    "mexico-tariffs": {"p_yes": 0.83, "volume": 6965,
                       "resolution_date": "2025-12-31"},
}


def relief_article(n, seq):
    """Tight family: the topic block repeated, one numeric token of spread."""
    title = f"Tariff relief deal {n}"
    body = " ".join([" ".join(TOPIC)] * seq["topic_repeats"])
    return {"title": title, "body": body,
            "url": f"https://news.example/runthrough/relief-{n}"}


def dispute_article(n, index, seq):
    """Diffuse family: topic block once, markers, per-article fillers."""
    title = f"Tariff dispute filing {n}"
    markers = " ".join(DISPUTE_MARKERS * seq["marker_repeats"])
    v = seq["filler_count"]
    fillers = [FILLERS[(index * v + j) % len(FILLERS)] for j in range(v)]
    body = " ".join([" ".join(TOPIC), markers, " ".join(fillers)])
    return {"title": title, "body": body,
            "url": f"https://news.example/runthrough/dispute-{n}"}


def offtopic_article(n, index):
    title = f"Tariff market brief {n}"
    offs = [OFF_TOPIC[(index * 40 + j) % len(OFF_TOPIC)] for j in range(40)]
    body = " ".join([" ".join(DROPPED_TOPIC_SUBSET), " ".join(offs)])
    return {"title": title, "body": body,
            "url": f"https://news.example/runthrough/offtopic-{n}"}


def build_articles(seq):
    """Articles in corpus order with their family roles; ages come later."""
    articles, roles = [], []
    for i in range(N_LABELED_YES):
        articles.append(relief_article(101 + i, seq))
        roles.append("labeled_yes")
    for i in range(N_LABELED_NO):
        articles.append(dispute_article(151 + i, i, seq))
        roles.append("labeled_no")
    for i in range(N_SCORING_YES):
        articles.append(relief_article(201 + i, seq))
        roles.append("scoring_yes")
    for i in range(N_SCORING_NO):
        articles.append(dispute_article(251 + i, N_LABELED_NO + i, seq))
        roles.append("scoring_no")
    for i in range(N_DROPPED):
        articles.append(offtopic_article(301 + i, i))
        roles.append("dropped")
    for i, article in enumerate(articles):
        article["source"] = SOURCES[i % len(SOURCES)]
        article["id"] = article_id_for(article["url"], article["title"])
    return articles, roles


def fixed_ages(roles):
    """Every age the solver does not control, keyed by corpus index."""
    ages = {}
    spreads = {
        "labeled_yes": iter(np.linspace(1.5, 4.5, N_LABELED_YES)),
        "labeled_no": iter(np.linspace(54.0, 60.0, N_LABELED_NO)),
        "dropped": iter(np.linspace(5.0, 50.0, N_DROPPED)),
    }
    for i, role in enumerate(roles):
        if role in spreads:
            ages[i] = float(next(spreads[role]))
    return ages


def scoring_offsets(roles):
    """Deterministic within-group age jitter, keyed by corpus index."""
    offsets = {}
    jitter = {
        "scoring_yes": iter(np.linspace(-2.0, 2.0, N_SCORING_YES)),
        "scoring_no": iter(np.linspace(-2.0, 2.0, N_SCORING_NO)),
    }
    for i, role in enumerate(roles):
        if role in jitter:
            offsets[i] = float(next(jitter[role]))
    return offsets


class Geometry:
    """Everything age-independent: embeddings, filter, classifier, clusters."""

    def __init__(self, articles, roles):
        self.roles = roles
        texts = [f"{a['title']}\n\n{a['body']}" for a in articles]
        self.vectors = [stub_embed(t) for t in texts]
        event_vec = stub_embed(EVENT["summary_text"])
        self.sims = [cosine_similarity(event_vec, v) for v in self.vectors]

        self.labeled_idx = [i for i, r in enumerate(roles)
                            if r.startswith("labeled")]
        self.scoring_idx = [i for i, r in enumerate(roles)
                            if r.startswith("scoring")]
        self.dropped_idx = [i for i, r in enumerate(roles) if r == "dropped"]

        kept_sims = [self.sims[i] for i in self.scoring_idx]
        dropped_sims = [self.sims[i] for i in self.dropped_idx]
        if min(kept_sims) < TAU + 0.004:
            raise ValueError(f"kept similarity too close to the gate: "
                             f"{min(kept_sims):.4f}")
        if max(dropped_sims) > TAU - 0.02:
            raise ValueError(f"dropped similarity too close to the gate: "
                             f"{max(dropped_sims):.4f}")

        X_train = np.vstack([self.vectors[i] for i in self.labeled_idx])
        self.y = np.array([1 if roles[i] == "labeled_yes" else 0
                           for i in self.labeled_idx])
        self.classifier = PcaOutcomeClassifier().fit(X_train, self.y)
        self.p_scoring = [
            article_p_yes(self.vectors[i], self.classifier.selection_)
            for i in self.scoring_idx]

        p_yes_mean = np.mean([p for i, p in zip(self.scoring_idx,
                                                self.p_scoring)
                              if roles[i] == "scoring_yes"])
        p_no_mean = np.mean([p for i, p in zip(self.scoring_idx,
                                               self.p_scoring)
                             if roles[i] == "scoring_no"])
        if not (p_no_mean < 0.3 < 0.7 < p_yes_mean):
            raise ValueError(f"family probabilities not separated: "
                             f"{p_yes_mean:.3f} vs {p_no_mean:.3f}")

        # Cluster order mirrors the pipeline: labeled block then scoring.
        self.cluster_idx = self.labeled_idx + self.scoring_idx
        X_cluster = np.vstack([self.vectors[i] for i in self.cluster_idx])
        self.km = TwoClusterKMeans(seed=0).fit(X_cluster)
        relief = {row for row, i in enumerate(self.cluster_idx)
                  if roles[i] in ("labeled_yes", "scoring_yes")}
        clusters = {self.km.labels_[row] for row in relief}
        others = {self.km.labels_[row]
                  for row in range(len(self.cluster_idx))
                  if row not in relief}
        if len(clusters) != 1 or clusters == others:
            raise ValueError("clusters do not align with the two families")
        seed_labels = {row: int(self.y[row])
                       for row in range(len(self.labeled_idx))}
        self.km_map = map_clusters_to_outcomes(
            self.km, seed_labels,
            mu_yes_top=self.classifier.selection_.mu_yes_top,
            top_features=self.classifier.selection_.top_features)

    def aggregates(self, ages):
        """(component aggregate, cluster mass) for a full age assignment."""
        pairs = [article_weight(float(self.km.distances_[row]), ages[i])
                 for row, i in enumerate(self.cluster_idx)]
        weights = combine_weights([p[0] for p in pairs],
                                  [p[1] for p in pairs])
        mass = aggregate_mass(self.km, self.km_map, weights)
        scores = [ArticleScore(article_id=str(i), p_yes=p,
                               recency_weight=recency_weight(ages[i]))
                  for i, p in zip(self.scoring_idx, self.p_scoring)]
        return aggregate_scores(scores), mass


def solve_ages(geometry, roles):
    """Pick the two scoring-group ages that land both aggregates on target."""
    base = fixed_ages(roles)
    offsets = scoring_offsets(roles)

    def assemble(x):
        age_yes, age_no = x
        ages = dict(base)
        for i, role in enumerate(roles):
            if role == "scoring_yes":
                ages[i] = age_yes + offsets[i]
            elif role == "scoring_no":
                ages[i] = age_no + offsets[i]
        return ages

    def residual(x):
        p_agg, mass = geometry.aggregates(assemble(x))
        return [p_agg - TARGET_PCA, mass - TARGET_KMEANS]

    fit = least_squares(residual, x0=[48.0, 35.0],
                        bounds=([4.0, 4.0], [58.0, 58.0]),
                        xtol=3e-16, ftol=3e-16, gtol=3e-16)
    misfit = float(np.max(np.abs(fit.fun)))
    if misfit > 1e-10:
        raise ValueError(f"age solve misfit {misfit:.2e}")
    return assemble(fit.x), fit.x, misfit


def write_fixture(articles, roles, ages):
    os.makedirs(FIXTURE_DIR, exist_ok=True)

    docs = []
    for i, article in enumerate(articles):
        published = AS_OF - timedelta(days=ages[i])
        docs.append({
            "source": article["source"],
            "title": article["title"],
            "body": article["body"],
            "published_at": published.isoformat(),
            "url": article["url"],
        })
    with open(os.path.join(FIXTURE_DIR, "articles.json"), "w",
              encoding="utf-8") as fh:
        json.dump(docs, fh, indent=2, sort_keys=True)
        fh.write("\n")

    label_rows = ["article_id,outcome"]
    for i, role in enumerate(roles):
        if role == "labeled_yes":
            label_rows.append(f"{articles[i]['id']},yes")
        elif role == "labeled_no":
            label_rows.append(f"{articles[i]['id']},no")
    with open(os.path.join(FIXTURE_DIR, "labels.csv"), "w",
              encoding="utf-8") as fh:
        fh.write("\n".join(label_rows) + "\n")

    # 20 relief articles and 5 dispute articles read as Yes, the other 16
    # dispute articles as No: 25 of 41. The first relief article answers
    # malformed once to exercise the retry path.
    responses = {}
    yes_budget = 5
    retry_done = False
    for i, role in enumerate(roles):
        article_id = articles[i]["id"]
        if role == "scoring_yes":
            if not retry_done:
                responses[article_id] = ["Leaning affirmative.", "{{YES}}"]
                retry_done = True
            else:
                responses[article_id] = ["{{YES}}"]
        elif role == "scoring_no":
            if yes_budget > 0:
                responses[article_id] = ["{{YES}}"]
                yes_budget -= 1
            else:
                responses[article_id] = ["{{NO}}"]
    with open(os.path.join(FIXTURE_DIR, "zeroshot.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"responses": responses, "default": "{{NO}}"}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")

    with open(os.path.join(FIXTURE_DIR, "markets.json"), "w",
              encoding="utf-8") as fh:
        json.dump(MARKETS, fh, indent=2, sort_keys=True)
        fh.write("\n")

    with open(os.path.join(FIXTURE_DIR, "events.json"), "w",
              encoding="utf-8") as fh:
        json.dump({"events": [EVENT]}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def verify():
    """Run the real pipeline over the written fixture and check the targets."""
    [event] = load_events(os.path.join(FIXTURE_DIR, "events.json"))
    with tempfile.TemporaryDirectory() as out:
        result = run_pipeline(event, PipelineOptions(
            out_dir=out, fixture_dir=FIXTURE_DIR,
            config_path=os.path.join(FIXTURE_DIR, "events.json")))
    record = result.record
    counts = record["counts"]
    assert counts == {"ingested": 105, "labeled": 50, "candidates": 55,
                      "kept": 41, "dropped": 14}, counts
    sna = record["sna"]
    assert abs(sna["pca"] - TARGET_PCA) < 1e-9, sna["pca"]
    assert abs(sna["kmeans"] - TARGET_KMEANS) < 1e-9, sna["kmeans"]
    assert abs(sna["zeroshot"] - 25 / 41) < 1e-12, sna["zeroshot"]
    assert sna["zeroshot_detail"] == {"classified": 41, "yes": 25, "no": 16,
                                      "malformed": 0}, sna["zeroshot_detail"]
    assert abs(record["crowd"]["p_final"] - 0.1068) < 1e-12
    assert abs(record["modules"]["macro"] - 0.56) < 1e-12
    assert abs(record["p_yes"] - 0.52333) < 5e-4, record["p_yes"]
    assert abs(sna["p_sna"] - 0.5773) < 5e-4, sna["p_sna"]
    return record


def main():
    sequences = [
        {"topic_repeats": 7, "marker_repeats": 2, "filler_count": 24},
        {"topic_repeats": 6, "marker_repeats": 2, "filler_count": 24},
        {"topic_repeats": 8, "marker_repeats": 2, "filler_count": 24},
        {"topic_repeats": 7, "marker_repeats": 2, "filler_count": 22},
        {"topic_repeats": 8, "marker_repeats": 2, "filler_count": 26},
    ]
    last_error = None
    for seq in sequences:
        articles, roles = build_articles(seq)
        try:
            geometry = Geometry(articles, roles)
            ages, solved, misfit = solve_ages(geometry, roles)
        except ValueError as exc:
            last_error = exc
            print(f"sequence {seq} rejected: {exc}")
            continue
        write_fixture(articles, roles, ages)
        record = verify()
        print(f"sequence {seq} accepted")
        print(f"  scoring ages: relief {solved[0]:.4f} d, "
              f"dispute {solved[1]:.4f} d (misfit {misfit:.2e})")
        print(f"  component aggregate {record['sna']['pca']:.6f}, "
              f"cluster mass {record['sna']['kmeans']:.6f}, "
              f"zero-shot {record['sna']['zeroshot']:.6f}")
        print(f"  semantic {record['sna']['p_sna']:.6f}, "
              f"crowd {record['crowd']['p_final']:.6f}, "
              f"final P(yes) {record['p_yes']:.6f}")
        return 0
    raise SystemExit(f"no article sequence satisfied the targets: {last_error}")


if __name__ == "__main__":
    sys.exit(main())
