#!/usr/bin/env python3
"""Regenerates the checked-in fixtures (except scoring/, see scoring/oracle.py).

    python3 fixtures/generate.py

Output is deterministic. Scores asserted here come from the independent
scorer in scoring/oracle.py.
"""

import json
import shutil
import sys
from datetime import datetime, timedelta, timezone
from email.utils import format_datetime
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE / "scoring"))
import oracle  # noqa: E402
from oracle import NOW, R, days_ago, normalize, record, score, ts  # noqa: E402


def write_lines(path, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, separators=(",", ":")) + "\n")


def write_json(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def labeled(raw, pkg, repo, verdict, repo_extra=None, source="manual", advisory=None):
    rec = record(raw, pkg, repo)
    if rec["repo"] is not None and repo_extra:
        rec["repo"].update(repo_extra)
    rec["label"] = {"name": normalize(raw), "verdict": verdict, "source": source, "advisory_id": advisory}
    return rec


# ---------------------------------------------------------------- minimal

def minimal():
    pkg = dict(releases=[R("0.0.1", days_ago(1))])
    assert score(pkg, None)["total"] == 2
    write_lines(HERE / "minimal.lines", [record("minimal", pkg, None)])


# ---------------------------------------------------------------- labeled

RECIPES = {
    0: dict(),
    1: dict(releases=[R("2024.1", days_ago(10))]),
    2: dict(releases=[R("0.0.1", days_ago(1))]),
    5: dict(description="d", homepage_url="https://h.example.org", keywords=["k"],
            repo_url="https://github.com/{n}/{n}", releases=[R("1.0.0", days_ago(10))]),
    6: dict(description="d", homepage_url="https://h.example.org", keywords=["k"],
            repo_url="https://github.com/{n}/{n}", releases=[R("1.0.0", days_ago(10))], subscribers=10),
    7: dict(description="d", homepage_url="https://h.example.org", keywords=["k"],
            repo_url="https://github.com/{n}/{n}", releases=[R("1.0.0", days_ago(10))], dependents=10),
}


def recipe(target, name):
    pkg = {k: (v.format(n=name) if isinstance(v, str) else v) for k, v in RECIPES[target].items()}
    assert score(pkg, None)["total"] == target, (target, score(pkg, None))
    return pkg


def labeled_corpus():
    rows = []
    for target, name, verdict in [
        (1, "benign-one", "benign"), (5, "benign-five", "benign"), (7, "benign-seven", "benign"),
        (0, "mal-zero", "malicious"), (2, "mal-two", "malicious"), (6, "mal-six", "malicious"),
    ]:
        rows.append(labeled(name, recipe(target, name), None, verdict))
    write_lines(HERE / "labeled.lines", rows)


# ---------------------------------------------------------------- confusion

VICTIMS = {
    # url: (package, stars, contributors)
    "https://github.com/pypa/sampleproject": ("sampleproject", 5300, 57),
    "https://github.com/CorwinDev/Discord-Bot": ("discord-bot", 320, 6),
    "https://github.com/encode/httpx": ("httpx", 14100, 210),
    "https://github.com/fake-useragent/fake-useragent": ("fake-useragent", 3800, 41),
    "https://github.com/psf/requests": ("requests", 52000, 640),
    "https://github.com/pandas-dev/pandas": ("pandas", 43000, 3300),
    "https://github.com/numpy/numpy": ("numpy", 28000, 1600),
    "https://github.com/scikit-learn/scikit-learn": ("scikit-learn", 59000, 2900),
}
# deliberately unregistered, so its impostors are caught by name relation
BITGET = ("https://github.com/cuongitl/python-bitget", "python-bitget", 60, 3)


def registry():
    rows = [{"repo_url": url, "package_name": pkg, "stars": stars} for url, (pkg, stars, _) in VICTIMS.items()]
    write_lines(HERE / "confusion" / "registry.lines", rows)


def victim_repo(url):
    if url == BITGET[0]:
        _, pkg, stars, contributors = BITGET
    else:
        pkg, stars, contributors = VICTIMS[url]
    return dict(stars=stars, contributors=contributors, has_readme=True), {"manifest_package_names": [pkg]}


MALICIOUS_CASES = [
    ("foo-helper", "0.1.0", "https://github.com/pypa/sampleproject"),
    ("bar-toolkit", "1.0.2", "https://github.com/pypa/sampleproject"),
    ("quick-deploy-utils", "0.0.3", "https://github.com/pypa/sampleproject"),
    ("discordbotpresence", "0.6.7", "https://github.com/CorwinDev/Discord-Bot"),
    ("discordbotstatus", "0.6.7", "https://github.com/encode/httpx"),
    ("fake-usreagent", "1.0.1", "https://github.com/fake-useragent/fake-useragent"),
    ("frexco-pip-requests", "2.31.0", "https://github.com/psf/requests"),
    ("python-bitget-api", "3.3.5", BITGET[0]),
    ("python-bitget-connect", "0.3.9", BITGET[0]),
    ("python-bitget-request", "4.9.5", BITGET[0]),
    ("python-bitget-wrapper", "0.3.7", BITGET[0]),
]

BENIGN_CASES = [
    ("pandas", "https://github.com/pandas-dev/pandas", None),
    ("numpy", "https://github.com/numpy/numpy", None),
    ("requests", "https://github.com/psf/requests", None),
    ("httpx", "https://github.com/encode/httpx", None),
    ("fake-useragent", "https://github.com/fake-useragent/fake-useragent", None),
    ("sampleproject", "https://github.com/pypa/sampleproject", None),
    ("python-bitget", BITGET[0], None),
    ("flask", "https://github.com/pallets/flask", None),
    ("django", "https://github.com/django/django", None),
    ("scikit-learn", "https://github.com/scikit-learn/scikit-learn", None),
    ("PyYAML", "https://github.com/yaml/pyyaml", None),
    ("attrs", "https://github.com/python-attrs/attrs", None),
    ("pytest", "https://github.com/pytest-dev/pytest", None),
    ("black", "https://github.com/psf/black", None),
    ("urllib3", "https://github.com/urllib3/urllib3", None),
    ("click", "https://github.com/pallets/click", None),
    ("rich", "https://github.com/Textualize/rich", None),
    ("pydantic", "https://github.com/pydantic/pydantic", None),
    ("python-dateutil", "https://github.com/dateutil/dateutil", ["python-dateutil"]),
    ("typing_extensions", "https://github.com/python/typing_extensions", None),
]


def confusion_cases():
    rows = []
    for name, version, url in MALICIOUS_CASES:
        pkg = dict(description=f"{name} utilities", keywords=["tools"], repo_url=url,
                   releases=[R(version, days_ago(40))])
        repo, extra = victim_repo(url)
        rows.append(labeled(name, pkg, repo, "malicious", extra, "osv", f"MAL-{name}"))
    for name, url, manifests in BENIGN_CASES:
        pkg = dict(description=f"The {name} project", homepage_url=url, keywords=["python"], repo_url=url,
                   releases=[R("1.0.0", days_ago(900)), R("1.1.0", days_ago(60))], dependents=500,
                   dependent_repos=2000, subscribers=100)
        repo = dict(stars=10000, contributors=300, has_readme=True)
        extra = {"manifest_package_names": manifests} if manifests else {}
        rows.append(labeled(name, pkg, repo, "benign", extra))
    assert len([r for r in rows if r["label"]["verdict"] == "benign"]) == 20
    write_lines(HERE / "confusion" / "cases.lines", rows)


# ---------------------------------------------------------------- pipeline

PIPE = HERE / "pipeline"
RECORDED = PIPE / "recorded"


def iso(dt):
    return dt.strftime("%Y-%m-%dT%H:%M:%S.000000Z")


def pypi_doc(name, versions, summary=None, home_page=None, project_urls=None, keywords=None, requires=None):
    releases = {}
    for v, when, *flags in versions:
        yanked = bool(flags and flags[0] == "yanked")
        releases[v] = [{"filename": f"{name}-{v}.tar.gz", "upload_time_iso_8601": iso(when), "yanked": yanked}]
    return {
        "info": {
            "name": name,
            "summary": summary,
            "home_page": home_page or "",
            "keywords": keywords or "",
            "project_urls": project_urls,
            "requires_dist": requires,
            "version": versions[-1][0] if versions else None,
        },
        "releases": releases,
    }


FEED = [
    # (name, published, link carries the name)
    ("colorsys-helper", days_ago(2), True),
    ("python-bitget-api", days_ago(3), True),
    ("discordbotpresence", days_ago(4), True),
    ("discordbotpresence", days_ago(4, hours=-1), True),  # repeated item
    ("tiny-tabulate", days_ago(5), False),
    ("fake-usreagent", days_ago(6), True),
    ("quick-deploy-utils", days_ago(8), True),
    ("jsonl-kit", days_ago(9), True),
    ("frexco-pip-requests", days_ago(12), True),
    ("stale-pkg", days_ago(60), True),  # before the cutoff
]

PACKAGES = {
    "colorsys-helper": pypi_doc("colorsys-helper", [("0.0.1", days_ago(2))], summary="Color helpers"),
    "python-bitget-api": pypi_doc(
        "python_bitget_api", [("3.3.5", days_ago(3))], summary="Bitget API",
        project_urls={"Homepage": "https://github.com/cuongitl/python-bitget"}, keywords="bitget,api"),
    "discordbotpresence": pypi_doc(
        "discordbotpresence", [("0.6.7", days_ago(4))], summary="Discord presence",
        project_urls={"Source": "https://github.com/CorwinDev/Discord-Bot"}, keywords="discord bot"),
    "tiny-tabulate": pypi_doc(
        "tiny-tabulate", [("0.2.0", days_ago(40)), ("0.3.0", days_ago(5))], summary="Small tables",
        project_urls={"Source": "https://github.com/tinytab/tables", "Homepage": "https://tinytab.example.org"},
        keywords="tables,cli", requires=["rich>=13", "pytest ; extra == 'test'"]),
    "fake-usreagent": pypi_doc(
        "fake-usreagent", [("1.0.1", days_ago(6))], summary="Up to date simple useragent faker",
        home_page="https://github.com/fake-useragent/fake-useragent", keywords="user-agent"),
    "quick-deploy-utils": pypi_doc(
        "quick-deploy-utils", [("0.0.2", days_ago(9), "yanked"), ("0.0.3", days_ago(8))], summary="Deploy helpers",
        project_urls={"Source": "https://github.com/pypa/sampleproject"}),
    "jsonl-kit": pypi_doc(
        "jsonl-kit", [("1.0.0", days_ago(9))], summary="JSON lines", home_page="https://jsonl.example.org",
        keywords="json"),
    "frexco-pip-requests": pypi_doc(
        "frexco-pip-requests", [("2.31.0", days_ago(12))], summary="Python HTTP for Humans.",
        project_urls={"Source": "https://github.com/psf/requests"}),
    "stale-pkg": pypi_doc("stale-pkg", [("0.1.0", days_ago(60))]),
    "requests": pypi_doc(
        "requests", [("2.31.0", days_ago(560)), ("2.32.0", days_ago(200)), ("2.32.3", days_ago(180))],
        summary="Python HTTP for Humans.", home_page="https://requests.readthedocs.io",
        project_urls={"Source": "https://github.com/psf/requests"}, keywords="http",
        requires=["charset-normalizer<4,>=2", "idna<4,>=2.5", "urllib3<3,>=1.21.1", "certifi>=2017.4.17",
                  "PySocks!=1.5.7,>=1.5.6 ; extra == 'socks'"]),
    "httpx": pypi_doc(
        "httpx", [("0.27.0", days_ago(280)), ("0.27.2", days_ago(90)), ("0.28.0", days_ago(3))],
        summary="The next generation HTTP client.",
        project_urls={"Source": "https://github.com/encode/httpx", "Homepage": "https://www.python-httpx.org"},
        keywords="http,async", requires=["anyio", "certifi", "httpcore==1.*", "idna"]),
    "sampleproject": pypi_doc(
        "sampleproject", [("3.0.0", days_ago(700)), ("4.0.0", days_ago(250))],
        summary="A sample Python project", project_urls={"Source": "https://github.com/pypa/sampleproject"},
        keywords="sample,setuptools,development", requires=["peppercorn"]),
    "python-bitget": pypi_doc(
        "python-bitget", [("1.0.7", days_ago(400)), ("1.0.8", days_ago(150))], summary="Bitget connector",
        project_urls={"Homepage": "https://github.com/cuongitl/python-bitget"}, keywords="bitget"),
}
ESTABLISHED = ["requests", "httpx", "sampleproject", "python-bitget"]

REPOS = {
    # slug: (stars, contributors, readme, manifest file, manifest body, tags)
    "psf/requests": (52000, 640, True, "pyproject.toml", '[project]\nname = "requests"\n',
                     [("v2.32.0", days_ago(200, hours=2)), ("v2.32.3", days_ago(180, hours=1))]),
    "encode/httpx": (14100, 210, True, "pyproject.toml", '[project]\nname = "httpx"\n',
                     [("0.27.0", days_ago(280)), ("0.27.2", days_ago(90)), ("0.28.0", days_ago(3))]),
    "pypa/sampleproject": (5300, 57, True, "setup.py", "setup(\n    name='sampleproject',\n)\n", []),
    "cuongitl/python-bitget": (60, 3, True, "setup.cfg", "[metadata]\nname = python-bitget\n", []),
    "CorwinDev/Discord-Bot": (320, 6, True, None, None, []),
    "fake-useragent/fake-useragent": (3800, 41, True, "pyproject.toml", '[project]\nname = "fake-useragent"\n', []),
    "tinytab/tables": (12, 2, True, "pyproject.toml", '[project]\nname = "tiny_tabulate"\n',
                       [("v0.2.0", days_ago(40, hours=3)), ("v0.3.0", days_ago(5, hours=1))]),
}

REFERENCE = {
    # name: (project doc extras, breakdown doc)
    "requests": ({"rank": 29, "dependents_count": 62000, "dependent_repos_count": 1100000, "status": None},
                 {"basic_info_present": 1, "repository_present": 1, "readme_present": 1, "license_present": 1,
                  "versions_present": 1, "follows_semver": 1, "recent_release": 1, "not_brand_new": 1,
                  "one_point_oh": 1, "dependent_projects": 10, "dependent_repositories": 6, "stars": 5,
                  "contributors": 1, "subscribers": 3, "all_prereleases": False, "any_outdated_dependencies": 0,
                  "is_deprecated": 0, "is_unmaintained": 0, "is_removed": 0}),
    "httpx": ({"rank": 24, "dependents_count": 9000, "dependent_repos_count": 120000, "status": None}, None),
    "sampleproject": ({"rank": 12, "dependents_count": 3, "dependent_repos_count": 900, "status": None}, None),
    "python-bitget": ({"rank": 9, "dependents_count": 1, "dependent_repos_count": 4, "status": None}, None),
    "colorsys-helper": ({"rank": -3, "dependents_count": 0, "dependent_repos_count": 0, "status": "Removed"}, None),
    "tiny-tabulate": ({"rank": 8, "dependents_count": 0, "dependent_repos_count": 2, "status": None}, None),
}

ADVISORIES = [
    ("MAL-2024-1001", "colorsys-helper"),
    ("MAL-2024-1002", "python-bitget-api"),
    ("MAL-2024-1003", "discordbotpresence"),
    ("MAL-2024-1004", "fake-usreagent"),
    ("MAL-2024-1005", "quick-deploy-utils"),
    ("MAL-2024-1006", "frexco-pip-requests"),
    ("MAL-2024-1007", "python_bitget_api"),  # second advisory for the same package
]


def feed_xml():
    items = []
    for name, when, with_link in FEED:
        link = f"<link>https://pypi.org/project/{name}/</link>" if with_link else ""
        items.append(
            f"<item><title>{name} added to PyPI</title>{link}"
            f"<description>new project</description>"
            f"<pubDate>{format_datetime(when, usegmt=True)}</pubDate></item>"
        )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<rss version="2.0"><channel><title>PyPI newest packages</title>'
        "<link>https://pypi.org/</link>\n" + "\n".join(items) + "\n</channel></rss>\n"
    )


def pipeline():
    shutil.rmtree(RECORDED, ignore_errors=True)
    (RECORDED / "feeds").mkdir(parents=True)
    (RECORDED / "feeds" / "packages.xml").write_text(feed_xml())
    for name, doc in PACKAGES.items():
        write_json(RECORDED / "pypi" / f"{normalize(name)}.json", doc)
    for slug, (stars, contributors, readme, mfile, mbody, tags) in REPOS.items():
        key = slug.replace("/", "__").lower()
        forge = RECORDED / "forge"
        write_json(forge / f"{key}.json", {"full_name": slug, "stargazers_count": stars})
        page, left = 1, contributors
        while left > 0:
            n = min(100, left)
            write_json(forge / f"{key}.contributors.{page}.json", [{"id": i} for i in range(n)])
            left -= n
            page += 1
        if readme:
            write_json(forge / f"{key}.readme.json", {"name": "README.md"})
        write_json(forge / f"{key}.releases.json",
                   [{"tag_name": t, "published_at": ts(at)} for t, at in tags])
        if mfile:
            (forge / f"{key}.{mfile}").write_text(mbody)
    for name, (project, breakdown) in REFERENCE.items():
        doc = {"name": name, "platform": "Pypi", **project}
        write_json(RECORDED / "librariesio" / f"{name}.json", doc)
        if breakdown:
            write_json(RECORDED / "librariesio" / f"{name}.sourcerank.json", breakdown)

    osv = PIPE / "osv"
    shutil.rmtree(osv, ignore_errors=True)
    for adv, name in ADVISORIES:
        write_json(osv / "pypi" / f"{adv}.json", {
            "id": adv, "summary": f"Malicious code in {name} (PyPI)",
            "affected": [{"package": {"ecosystem": "PyPI", "name": name}}],
        })
    write_json(osv / "npm" / "MAL-2024-2001.json", {
        "id": "MAL-2024-2001", "summary": "Malicious code in colorsys-helper (npm)",
        "affected": [{"package": {"ecosystem": "npm", "name": "colorsys-helper"}}],
    })
    (osv / "README.txt").write_text("Advisories in the OSV schema, one per file.\n")

    (PIPE / "established.txt").write_text("\n".join(ESTABLISHED) + "\n")


def main():
    minimal()
    labeled_corpus()
    registry()
    confusion_cases()
    pipeline()


if __name__ == "__main__":
    main()
