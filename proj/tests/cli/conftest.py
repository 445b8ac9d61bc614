import json
import os
import random
import subprocess
from pathlib import Path

import pytest

BIN = os.environ.get("GS_AUDIT_BIN", "gs_audit")
SCHEMA = Path(os.environ.get("GS_AUDIT_SCHEMA",
                             Path(__file__).resolve().parents[2] / "schemas" / "report-v1.schema.json"))

MALE_GENRES = ["Action", "Adventure", "Comedy", "Crime", "Horror", "War"]
FEMALE_GENRES = ["Romance", "Drama", "Animation", "Children's"]


def run(*args, check=None):
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True, timeout=600)
    if check is not None:
        assert proc.returncode == check, f"exit {proc.returncode}\nstdout:\n{proc.stdout}\nstderr:\n{proc.stderr}"
    return proc


def write_ml1m(root, users, movies, ratings):
    """users: [(id, 'M'|'F')], movies: [(id, title, [genres])], ratings: [(user, movie, stars)]."""
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "users.dat", "w", encoding="latin-1") as f:
        for uid, g in users:
            f.write(f"{uid}::{g}::25::4::12345\n")
    with open(root / "movies.dat", "w", encoding="latin-1") as f:
        for mid, title, genres in movies:
            f.write(f"{mid}::{title}::{'|'.join(genres)}\n")
    with open(root / "ratings.dat", "w", encoding="latin-1") as f:
        for t, (uid, mid, stars) in enumerate(ratings):
            f.write(f"{uid}::{mid}::{stars}::{978300000 + t}\n")
    return root


def synthetic_ml1m(root, n_users=120, n_movies=60, seed=7):
    """Users lean towards genres of their stereotype with probability 0.75."""
    rng = random.Random(seed)
    movies = []
    for mid in range(1, n_movies + 1):
        pool = MALE_GENRES if mid % 2 else FEMALE_GENRES
        movies.append((mid, f"Movie {mid} (1990)", rng.sample(pool, 2)))
    male_ids = [m for m, _, _ in movies if m % 2]
    female_ids = [m for m, _, _ in movies if not m % 2]
    users, ratings = [], []
    for uid in range(1, n_users + 1):
        g = "M" if uid % 3 else "F"
        users.append((uid, g))
        own, other = (male_ids, female_ids) if g == "M" else (female_ids, male_ids)
        seen = set()
        for _ in range(rng.randint(12, 24)):
            mid = rng.choice(own if rng.random() < 0.75 else other)
            if mid in seen:
                continue
            seen.add(mid)
            ratings.append((uid, mid, rng.randint(1, 5)))
    return write_ml1m(root, users, movies, ratings)


def load(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def strip_timestamps(report):
    report = json.loads(json.dumps(report))
    report["manifest"].pop("started_at", None)
    report["manifest"].pop("finished_at", None)
    return report


@pytest.fixture(scope="session")
def schema():
    return load(SCHEMA)


@pytest.fixture
def validate(schema):
    import jsonschema

    def check(report):
        jsonschema.validate(report, schema)
        return report
    return check


@pytest.fixture(scope="session")
def ml1m_root(tmp_path_factory):
    return synthetic_ml1m(tmp_path_factory.mktemp("ml1m"))


@pytest.fixture(scope="session")
def interchange(tmp_path_factory, ml1m_root):
    out = tmp_path_factory.mktemp("interchange")
    run("ingest", "--format", "ml1m", "--root", ml1m_root, "--out", out, check=0)
    return out
