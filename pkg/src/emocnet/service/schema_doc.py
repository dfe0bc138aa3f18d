"""Builds the published JSON schema document for every API payload.

Run ``python -m emocnet.service.schema_doc docs/service_schema.json`` to
regenerate the file; a test guards against drift.
"""

from __future__ import annotations

import json
import sys

from . import schemas

_MODELS = [
    schemas.CreateSessionRequest,
    schemas.CreateSessionResponse,
    schemas.SessionView,
    schemas.QueryBatchView,
    schemas.SubmitLabelsRequest,
    schemas.SubmitLabelsResponse,
    schemas.ErrorResponse,
    schemas.HealthResponse,
]


def build_schema_document() -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "emocnet annotation service payloads",
        "payloads": {model.__name__: model.model_json_schema()
                     for model in _MODELS},
    }


def render() -> str:
    return json.dumps(build_schema_document(), indent=2, sort_keys=True) + "\n"


def main(argv=None) -> int:
    argv = argv if argv is not None else sys.argv[1:]
    out = argv[0] if argv else "docs/service_schema.json"
    with open(out, "w", encoding="utf-8") as f:
        f.write(render())
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
