"""Cursor-paginated client for the OpenAlex works endpoint.

Uses the polite pool (mailto parameter) and surfaces page failures with the
cursor they occurred at so an interrupted crawl can resume.
"""

from __future__ import annotations

import logging
from typing import Any, Callable, Iterator, Mapping

log = logging.getLogger(__name__)

OPENALEX_WORKS_URL = "https://api.openalex.org/works"

FetchFn = Callable[[str, Mapping[str, Any]], Mapping[str, Any]]


class PageError(RuntimeError):
    """A page fetch failed; `cursor` allows resuming the crawl."""

    def __init__(self, cursor: str, cause: Exception) -> None:
        super().__init__(f"page fetch failed at cursor {cursor!r}: {cause}")
        self.cursor = cursor
        self.cause = cause


def _requests_fetch(url: str, params: Mapping[str, Any]) -> Mapping[str, Any]:
    import requests

    response = requests.get(url, params=dict(params), timeout=60)
    response.raise_for_status()
    return response.json()


class OpenAlexPager:
    """Iterate works pages via cursor pagination.

    `fetch` is injectable for tests; the default uses requests. Pages are
    yielded in crawl order so downstream ingestion stays deterministic.
    """

    def __init__(
        self,
        mailto: str,
        filter_expr: str | None = None,
        per_page: int = 200,
        base_url: str = OPENALEX_WORKS_URL,
        fetch: FetchFn | None = None,
    ) -> None:
        if not mailto:
            raise ValueError("mailto is required for the OpenAlex polite pool")
        self.mailto = mailto
        self.filter_expr = filter_expr
        self.per_page = per_page
        self.base_url = base_url
        self.fetch = fetch or _requests_fetch

    def iter_pages(self, cursor: str = "*", max_pages: int | None = None) -> Iterator[Mapping[str, Any]]:
        pages = 0
        while cursor:
            if max_pages is not None and pages >= max_pages:
                return
            params: dict[str, Any] = {
                "per-page": self.per_page,
                "cursor": cursor,
                "mailto": self.mailto,
            }
            if self.filter_expr:
                params["filter"] = self.filter_expr
            try:
                page = self.fetch(self.base_url, params)
            except Exception as exc:
                raise PageError(cursor, exc) from exc
            pages += 1
            yield page
            meta = page.get("meta") or {}
            cursor = meta.get("next_cursor")
        log.debug("pagination finished after %d pages", pages)

    def iter_works(self, cursor: str = "*", max_pages: int | None = None) -> Iterator[Mapping[str, Any]]:
        for page in self.iter_pages(cursor=cursor, max_pages=max_pages):
            yield from page.get("results") or []
