import json
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from faunawatch.domain import SearchFamily, TimeWindow, default_data_path, load_families
from faunawatch.errors import MalformedResponse, TransportError, WindowTooWide
from faunawatch.gdelt import (
    ArticleRef,
    FixtureTransport,
    LiveTransport,
    Query,
    article_id,
    build_queries,
    dedupe_refs,
    normalize_url,
    parse_artlist,
    scan_window,
)

WINDOW = TimeWindow.parse("2019-05-06T00:00:00Z", "2019-05-08T00:00:00Z")


def entry(url, mobile=None, seendate="20190506T101500Z", **extra):
    e = {"url": url, "title": "t", "seendate": seendate, "domain": "x.com",
         "language": "English", "sourcecountry": "Kenya"}
    if mobile:
        e["url_mobile"] = mobile
    e.update(extra)
    return e


def body(*entries):
    return json.dumps({"articles": list(entries)}).encode()


def make_ref(url, **kw):
    return ArticleRef(url=url, mobile_url=None, title="", seen_date=WINDOW.start,
                      source_country="", language="", domain="", **kw)


def test_build_queries_elephant():
    fams = {f.taxon: f for f in load_families(default_data_path("families.json"))}
    qs = build_queries(fams["elephant"], WINDOW)
    assert len(qs) == 9
    assert qs[0].text == "elephant ivory sourcelang:eng"
    assert all(q.window == WINDOW for q in qs)
    assert len(build_queries(fams["saiga"], WINDOW)) == 8
    assert len(build_queries(fams["orchid"], WINDOW)) == 9


def test_build_queries_single():
    (q,) = build_queries(SearchFamily("lion", "lion", ("cat",)), WINDOW)
    assert q.text == "lion cat sourcelang:eng" and q.keyword == "cat" and q.taxon == "lion"


@given(st.lists(st.sampled_from(list("abcdefgh")), min_size=1, max_size=8, unique=True))
def test_one_query_per_keyword(keywords):
    fam = SearchFamily("t", "main", tuple(keywords))
    assert len(build_queries(fam, WINDOW)) == len(keywords)


def test_query_params():
    q = Query("elephant ivory sourcelang:eng", WINDOW)
    p = q.params()
    assert p["mode"] == "ArtList" and p["format"] == "json" and p["maxrecords"] == 250
    assert p["startdatetime"] == "20190506000000" and p["enddatetime"] == "20190508000000"
    assert p["sort"] == "DateAsc"
    assert q.url().startswith("https://api.gdeltproject.org/api/v2/doc/doc?query=elephant+ivory")
    with pytest.raises(ValueError):
        Query("x", WINDOW, max_records=251)


def test_parse_artlist_both_urls():
    (ref,) = parse_artlist(body(entry("https://x.com/a", mobile="https://m.x.com/a")), "tiger", "cat")
    assert ref.url == "https://x.com/a" and ref.mobile_url == "https://m.x.com/a"
    assert ref.seen_date == datetime(2019, 5, 6, 10, 15, tzinfo=timezone.utc)
    assert (ref.source_country, ref.language, ref.taxon, ref.matched_keyword) == (
        "Kenya", "English", "tiger", "cat")


def test_parse_artlist_missing_mobile():
    (ref,) = parse_artlist(body(entry("https://x.com/a")))
    assert ref.mobile_url is None


def test_parse_artlist_skips_entries_without_url(caplog):
    refs = parse_artlist(body(entry("https://x.com/a"), {"title": "no url"}, entry("not a url"),
                              entry("https://x.com/b", seendate="garbage")))
    assert [r.url for r in refs] == ["https://x.com/a"]
    assert "skipped 3" in caplog.text


@pytest.mark.parametrize("raw", [b'{"articles": [{"url": "https://x', b"\xff\xfe", b"[]",
                                 b'{"articles": 3}', b"Invalid query"])
def test_parse_artlist_malformed(raw):
    with pytest.raises(MalformedResponse):
        parse_artlist(raw)


def test_parse_artlist_empty_object():
    assert parse_artlist(b"{}") == []


def test_normalize_url():
    assert normalize_url("HTTP://X.com/a/?utm_source=t&id=3&utm_medium=m#frag") == "https://x.com/a?id=3"
    assert normalize_url("https://x.com/") == "https://x.com"
    assert normalize_url("https://x.com/Path") == "https://x.com/Path"


def test_article_id_frozen():
    # sha256sum of the hand-normalized url
    # "https://news.example.com/wildlife/pangolin-scales-seized"
    expected = "c3f46dde79b771bc66b370f7e94c8feb431ae1a6dd7f115ffac9bb2af1f358cf"
    assert article_id("HTTP://News.Example.com/wildlife/pangolin-scales-seized/?utm_source=feed#top") == expected


def test_dedupe_examples():
    a = make_ref("https://x.com/a")
    assert dedupe_refs([a, a]) == [a]
    first = make_ref("http://x.com/a?utm_source=t", matched_keyword="ivory")
    second = make_ref("https://x.com/a", matched_keyword="poach")
    assert dedupe_refs([first, second]) == [first]
    assert dedupe_refs([]) == []


urls = st.builds(
    lambda scheme, host, path, q, frag: f"{scheme}://{host}/{path}{q}{frag}",
    st.sampled_from(["http", "https", "HTTP"]),
    st.sampled_from(["x.com", "X.com", "y.org"]),
    st.sampled_from(["", "a", "a/", "b/c"]),
    st.sampled_from(["", "?utm_source=z", "?id=1", "?id=1&utm_campaign=q"]),
    st.sampled_from(["", "#top"]),
)


@given(st.lists(urls, max_size=12))
def test_dedupe_properties(url_list):
    refs = [make_ref(u) for u in url_list]
    once = dedupe_refs(refs)
    assert dedupe_refs(once) == once
    assert len(once) <= len(refs)
    assert all(r in refs for r in once)
    assert len({normalize_url(r.url) for r in once}) == len(once)


def write_fixture(root, taxon, keyword, window, payload):
    d = root / taxon / keyword
    d.mkdir(parents=True, exist_ok=True)
    name = f"{window.start:%Y%m%d%H%M%S}-{window.end:%Y%m%d%H%M%S}.json"
    (d / name).write_bytes(payload)


FAM = SearchFamily("rhino", "rhino", ("horn", "poach"))


def test_scan_window_dedup_keeps_first_keyword(tmp_path):
    write_fixture(tmp_path, "rhino", "horn", WINDOW, body(entry("https://x.com/1"), entry("https://x.com/2")))
    write_fixture(tmp_path, "rhino", "poach", WINDOW, body(entry("http://x.com/2/"), entry("https://x.com/3")))
    refs = scan_window(FAM, WINDOW, FixtureTransport(tmp_path))
    assert [r.url for r in refs] == ["https://x.com/1", "https://x.com/2", "https://x.com/3"]
    assert [r.matched_keyword for r in refs] == ["horn", "horn", "poach"]
    assert {r.taxon for r in refs} == {"rhino"}


def test_scan_window_all_empty(tmp_path):
    for kw in FAM.additional_keywords:
        write_fixture(tmp_path, "rhino", kw, WINDOW, b"{}")
    assert scan_window(FAM, WINDOW, FixtureTransport(tmp_path)) == []


def test_scan_window_is_deterministic(tmp_path):
    write_fixture(tmp_path, "rhino", "horn", WINDOW, body(entry("https://x.com/1")))
    write_fixture(tmp_path, "rhino", "poach", WINDOW, body(entry("https://x.com/2")))
    runs = [json.dumps([r.to_dict() for r in scan_window(FAM, WINDOW, FixtureTransport(tmp_path))])
            for _ in range(2)]
    assert runs[0] == runs[1]


def test_scan_window_drops_out_of_window_hits(tmp_path):
    write_fixture(tmp_path, "rhino", "horn", WINDOW, body(entry("https://x.com/1", seendate="20200101T000000Z")))
    write_fixture(tmp_path, "rhino", "poach", WINDOW, b"{}")
    assert scan_window(FAM, WINDOW, FixtureTransport(tmp_path)) == []


def test_scan_window_fail_fast_and_best_effort(tmp_path):
    write_fixture(tmp_path, "rhino", "poach", WINDOW, body(entry("https://x.com/3")))
    with pytest.raises(TransportError) as info:
        scan_window(FAM, WINDOW, FixtureTransport(tmp_path))
    assert info.value.context["keyword"] == "horn"
    refs = scan_window(FAM, WINDOW, FixtureTransport(tmp_path), best_effort=True)
    assert [r.url for r in refs] == ["https://x.com/3"]
    write_fixture(tmp_path, "rhino", "horn", WINDOW, b"<html>oops")
    with pytest.raises(MalformedResponse):
        scan_window(FAM, WINDOW, FixtureTransport(tmp_path))


def test_live_window_limit():
    wide = TimeWindow.parse("2019-05-06T00:00:00Z", "2019-05-10T00:00:00Z")
    with pytest.raises(WindowTooWide):
        scan_window(FAM, wide, LiveTransport(session=object()))


def test_fixture_transport_has_no_window_limit(tmp_path):
    wide = TimeWindow.parse("2019-05-06T00:00:00Z", "2019-05-10T00:00:00Z")
    for kw in FAM.additional_keywords:
        write_fixture(tmp_path, "rhino", kw, wide, b"{}")
    assert scan_window(FAM, wide, FixtureTransport(tmp_path)) == []


class FakeResponse:
    def __init__(self, status, content):
        self.status_code = status
        self.content = content


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def get(self, url, params=None, timeout=None):
        self.calls.append((url, params))
        return self.responses.pop(0)


def test_live_transport_rate_limits_and_builds_request():
    slept = []
    now = [100.0]
    session = FakeSession([FakeResponse(200, b"{}"), FakeResponse(200, b"{}")])
    transport = LiveTransport(session=session, sleep=slept.append, clock=lambda: now[0])
    assert scan_window(FAM, WINDOW, transport) == []
    assert slept == [1.0]
    url, params = session.calls[0]
    assert url == "https://api.gdeltproject.org/api/v2/doc/doc"
    assert params["query"] == "rhino horn sourcelang:eng"


def test_live_transport_http_error():
    transport = LiveTransport(session=FakeSession([FakeResponse(429, b"")]), sleep=lambda s: None)
    with pytest.raises(TransportError):
        transport.search(Query("rhino horn", WINDOW))


def test_page_limit_warning(tmp_path, caplog):
    many = body(*[entry(f"https://x.com/{i}") for i in range(250)])
    write_fixture(tmp_path, "rhino", "horn", WINDOW, many)
    write_fixture(tmp_path, "rhino", "poach", WINDOW, b"{}")
    refs = scan_window(FAM, WINDOW, FixtureTransport(tmp_path))
    assert len(refs) == 250
    assert "page limit" in caplog.text


def test_ref_roundtrip():
    ref = make_ref("https://x.com/a", taxon="lion", matched_keyword="cat")
    assert ArticleRef.from_dict(ref.to_dict()) == ref
