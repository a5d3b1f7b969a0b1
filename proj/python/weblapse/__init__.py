"""Website timelapses from aggregated web-archive snapshots."""

from weblapse._core import (  # noqa: F401
    __version__,
    canonicalize_url,
    complete_partial_date,
    hamming_distance,
    md5_hex,
    parse_memento_datetime,
    parse_request_text,
    parse_timemap_internal,
    parse_timemap_link_format,
    run_offline,
    select_per_year,
    serialize_timemap_internal,
    simhash64,
    url_hash,
)
