import random

import numpy as np
import pytest

from jobmarket.embed import EmbeddingStore

TOY_VOCAB = [
    "php", "developer", "senior", "engineer", "software", "java", "python",
    "web", "data", "scientist", "analyst", "backend", "frontend", "manager",
    "tester", "android", "designer", "lead", "architect", "devops",
]


def make_store(tokens, dim=5, seed=42):
    """Deterministic toy embeddings: one fixed random vector per token."""
    rng = random.Random(seed)
    table = {}
    for t in tokens:
        table[t] = np.array([rng.uniform(-1, 1) for _ in range(dim)])
    return EmbeddingStore(table, dim)


@pytest.fixture(scope="session")
def toy_store():
    return make_store(TOY_VOCAB)


LISTING_TEMPLATE = """<html><body>
<h1>Job listings ({page})</h1>
{ads}
{next}
</body></html>
"""

AD_TEMPLATE = """<html><body>
<dl class="job">
{rows}
</dl>
</body></html>
"""


def write_fixture_site(root, n_pages, ads_per_page, ad_fields=None,
                       duplicate_anchor_on=None):
    """Directory-tree fixture site: listing_1.html .. listing_N.html.

    Returns (root listing path, list of ad ids in discovery order).
    """
    root.mkdir(parents=True, exist_ok=True)
    ad_ids = []
    serial = 0
    for page in range(1, n_pages + 1):
        anchors = []
        for k in range(ads_per_page):
            serial += 1
            ad_id = f"ad-{serial:04d}"
            ad_ids.append(ad_id)
            fields = {
                "id": ad_id,
                "job_name": f"php developer {serial % 7}",
                "company_name": f"company {serial % 11}",
                "advertisement_date": "2021-08-15",
                "apply_count": str(serial * 3 % 97),
                "view_count": str(serial * 7 % 503),
                "role_category": "Programming",
                "education": "B.Tech|MCA",
                "industry": "IT-Software",
                "min_experience": str(serial % 5),
                "max_experience": str(serial % 5 + 2),
                "employment_type": "Full Time",
                "functional_area": "IT Software",
                "locations": "Bangalore|Pune" if serial % 3 == 0 else "Mumbai",
                "key_skills": "php|mysql|javascript" if serial % 2 else "java|sql",
                "vacancy": str(1 + serial % 6),
                "salary": "Not Disclosed",
                "description": f"role {serial}",
            }
            if ad_fields:
                fields.update(ad_fields)
            rows = "\n".join(f"<dt>{k}</dt><dd>{v}</dd>" for k, v in fields.items())
            (root / f"{ad_id}.html").write_text(AD_TEMPLATE.format(rows=rows),
                                                encoding="utf-8")
            anchors.append(f'<a class="job-ad" href="{ad_id}.html">{ad_id}</a>')
            if duplicate_anchor_on and serial in duplicate_anchor_on:
                anchors.append(f'<a class="job-ad" href="{ad_id}.html">dup</a>')
        nxt = (f'<a class="next-page" href="listing_{page + 1}.html">next</a>'
               if page < n_pages else "")
        (root / f"listing_{page}.html").write_text(
            LISTING_TEMPLATE.format(page=page, ads="\n".join(anchors), next=nxt),
            encoding="utf-8")
    return root / "listing_1.html", ad_ids


GAZETTEER_CSV = """name,lat,lon,region
Bangalore,12.97,77.59,South
Mumbai,19.08,72.88,West
Pune,18.52,73.86,West
Delhi,28.61,77.21,North
Chennai,13.08,80.27,South
Hyderabad,17.39,78.49,South
"""


@pytest.fixture
def gazetteer_file(tmp_path):
    p = tmp_path / "cities.csv"
    p.write_text(GAZETTEER_CSV, encoding="utf-8")
    return p
