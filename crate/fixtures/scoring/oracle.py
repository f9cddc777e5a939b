#!/usr/bin/env python3
"""Independent reference scorer for the golden scoring corpus.

Writes golden.lines (snapshot records) and golden_expected.csv (per-metric
values and total) next to this file. Shares no code with the Rust crate:
versions are checked with the regular expression published alongside the
SemVer 2.0.0 grammar, and log buckets use decimal arithmetic.

    python3 fixtures/scoring/oracle.py
"""

import csv
import json
import math
import re
from datetime import datetime, timedelta, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

HERE = Path(__file__).resolve().parent
NOW = datetime(2024, 12, 1, tzinfo=timezone.utc)
SIX_MONTHS = timedelta(days=183)

SEMVER = re.compile(
    r"^(0|[1-9]\d*)\.(0|[1-9]\d*)\.(0|[1-9]\d*)"
    r"(?:-((?:0|[1-9]\d*|\d*[a-zA-Z-][0-9a-zA-Z-]*)(?:\.(?:0|[1-9]\d*|\d*[a-zA-Z-][0-9a-zA-Z-]*))*))?"
    r"(?:\+([0-9a-zA-Z-]+(?:\.[0-9a-zA-Z-]+)*))?$"
)

METRICS = [
    "basic_info_present", "source_repository_present", "readme_present",
    "has_multiple_versions", "follows_semver", "recent_release", "not_brand_new",
    "ge_1_0_0", "dependent_packages", "dependent_repositories", "stars",
    "contributors", "subscribers", "all_prereleases", "any_outdated_dependencies",
    "is_deprecated", "is_unmaintained", "is_removed",
]


def ts(dt):
    return dt.strftime("%Y-%m-%dT%H:%M:%SZ")


def days_ago(d, hours=0):
    return NOW - timedelta(days=d, hours=hours)


def normalize(name):
    return re.sub(r"[-_.]+", "-", name.strip().lower())


def semver(text):
    m = SEMVER.match(text)
    if not m:
        return None
    return (int(m.group(1)), int(m.group(2)), int(m.group(3)), m.group(4) is not None)


def bucket(count, mult):
    if count == 0:
        return 0
    value = Decimal(math.log10(count)) * Decimal(mult)
    # counts here never sit within float noise of a .5 boundary except exact
    # powers of ten, where log10 is exact
    return int(value.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def score(pkg, repo):
    rel = pkg.get("releases", [])
    parsed = [semver(r["v"]) for r in rel]
    times = [r["t"] for r in rel]
    m = dict.fromkeys(METRICS, 0)
    present = lambda s: bool(s and s.strip())
    m["basic_info_present"] = int(
        present(pkg.get("description"))
        and (present(pkg.get("homepage_url")) or present(pkg.get("repo_url")))
        and any(k.strip() for k in pkg.get("keywords", []))
    )
    m["source_repository_present"] = int(present(pkg.get("repo_url")))
    m["readme_present"] = int(bool(repo and repo.get("has_readme")))
    if rel:
        m["has_multiple_versions"] = int(len(rel) >= 2)
        m["follows_semver"] = int(all(p is not None for p in parsed))
        m["recent_release"] = int(NOW - max(times) <= SIX_MONTHS)
        m["not_brand_new"] = int(NOW - min(times) >= SIX_MONTHS)
        m["ge_1_0_0"] = int(any(p and not p[3] and p[0] >= 1 for p in parsed))
        m["all_prereleases"] = -int(all(p is not None and p[3] for p in parsed))
    m["dependent_packages"] = bucket(pkg.get("dependents", 0), 2)
    m["dependent_repositories"] = bucket(pkg.get("dependent_repos", 0), 1)
    if repo:
        m["stars"] = bucket(repo.get("stars", 0), 1)
        m["contributors"] = bucket(repo.get("contributors", 0), Decimal("0.5"))
    m["subscribers"] = bucket(pkg.get("subscribers", 0), Decimal("0.5"))
    status = pkg.get("status", "active")
    for s in ("deprecated", "unmaintained", "removed"):
        m["is_" + s] = -5 if status == s else 0
    m["total"] = sum(m[k] for k in METRICS)
    return m


def R(v, t):
    return {"v": v, "t": t}


RICH = dict(
    description="Batteries-included toolkit",
    homepage_url="https://rich-pkg.example.org",
    repo_url="https://github.com/rich-org/rich-pkg",
    keywords=["toolkit", "cli"],
    releases=[R("0.9.0", days_ago(400)), R("1.0.0", days_ago(200)), R("1.1.0", days_ago(30))],
    dependents=100, dependent_repos=10, subscribers=3,
)
RICH_REPO = dict(stars=5000, contributors=50, has_readme=True)

CASES = [
    ("minimal", dict(releases=[R("0.0.1", days_ago(1))]), None),
    ("minimal-removed", dict(releases=[R("0.0.1", days_ago(1))], status="removed"), None),
    ("rich-pkg", RICH, RICH_REPO),
    ("Rich_Pkg.Removed", dict(RICH, repo_url="https://github.com/rich-org/rich-pkg-removed", status="removed"), RICH_REPO),
    ("no-releases", dict(), None),
    ("all-pre", dict(releases=[R("1.0.0-rc.1", days_ago(201)), R("1.0.0-rc.2", days_ago(200))]), None),
    ("calver-pkg", dict(releases=[R("2024.1", days_ago(300)), R("2024.2", days_ago(10))]), None),
    ("deprecated-pkg", dict(RICH, repo_url=None, status="deprecated"), None),
    ("unmaintained-pkg", dict(releases=[R("2.0.0", days_ago(700))], status="unmaintained", dependents=3), None),
    ("edge-183", dict(releases=[R("1.0.0", days_ago(183))]), None),
    ("edge-184", dict(releases=[R("1.0.0", days_ago(184))]), None),
    ("rounding-a", dict(releases=[R("0.1.0", days_ago(5))], dependents=3, dependent_repos=31, subscribers=10,
                        repo_url="https://github.com/round/a"), dict(stars=31, contributors=3)),
    ("rounding-b", dict(releases=[R("0.1.0", days_ago(5))], dependents=6, dependent_repos=32, subscribers=9,
                        repo_url="https://github.com/round/b"), dict(stars=32, contributors=10)),
    ("no-url-info", dict(description="Only words", keywords=["x"], releases=[R("0.3.0", days_ago(3))]), None),
    ("repo-url-info", dict(description="Has a repo", keywords=["y"], repo_url="https://github.com/acme/repo-url-info",
                           releases=[R("0.3.0", days_ago(3))]), None),
    ("blank-description", dict(description="", homepage_url="https://blank.example.org", keywords=["z"],
                               releases=[R("0.3.0", days_ago(3))]), None),
    ("mixed-pre", dict(releases=[R("0.1.0", days_ago(20)), R("0.2.0-beta.1", days_ago(10))]), None),
    ("lone-rc", dict(releases=[R("1.0.0-rc.1", days_ago(5))]), None),
    ("leading-zero", dict(releases=[R("01.2.3", days_ago(250)), R("1.2.3", days_ago(240)), R("1.0.0+build.5", days_ago(230))]), None),
    ("huge", dict(RICH, repo_url="https://github.com/huge/huge", dependents=1_000_000, dependent_repos=1_000_000,
                  subscribers=1_000_000), dict(stars=1_000_000, contributors=1_000_000, has_readme=True)),
]


def record(raw_name, pkg, repo):
    releases = sorted(pkg.get("releases", []), key=lambda r: r["t"])
    package = {
        "name": raw_name,
        "normalized_name": normalize(raw_name),
        "description": pkg.get("description"),
        "homepage_url": pkg.get("homepage_url"),
        "repo_url": pkg.get("repo_url"),
        "keywords": pkg.get("keywords", []),
        "releases": [
            {"version_text": r["v"], "published_at": ts(r["t"]),
             "is_prerelease": bool(semver(r["v"]) and semver(r["v"])[3])}
            for r in releases
        ],
        "dependents_count": pkg.get("dependents", 0),
        "dependent_repos_count": pkg.get("dependent_repos", 0),
        "subscribers_count": pkg.get("subscribers", 0),
        "dependencies": [],
        "status": pkg.get("status", "active"),
        "captured_at": ts(NOW),
    }
    repo_json = None
    if repo is not None:
        owner, name = pkg["repo_url"].rstrip("/").split("/")[-2:]
        repo_json = {
            "url": f"https://github.com/{owner}/{name}",
            "host": "github.com",
            "owner": owner,
            "name": name,
            "stars": repo.get("stars", 0),
            "contributors_count": repo.get("contributors", 0),
            "has_readme": repo.get("has_readme", False),
            "tags": [],
            "manifest_package_names": [],
            "captured_at": ts(NOW),
        }
    return {"package": package, "repo": repo_json}


def main():
    with open(HERE / "golden.lines", "w") as f:
        for raw, pkg, repo in CASES:
            f.write(json.dumps(record(raw, pkg, repo), separators=(",", ":")) + "\n")
    with open(HERE / "golden_expected.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name"] + METRICS + ["total"])
        for raw, pkg, repo in CASES:
            m = score(pkg, repo)
            w.writerow([normalize(raw)] + [m[k] for k in METRICS] + [m["total"]])
    # the spec'd anchors
    totals = {normalize(r): score(p, rp)["total"] for r, p, rp in CASES}
    assert totals["minimal"] == 2 and totals["minimal-removed"] == -3 and totals["rich-pkg"] == 18, totals


if __name__ == "__main__":
    main()
