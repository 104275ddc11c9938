# nexus/intake/survey_schema.py
#
# JSON Schema for the survey document. Only the document shape lives
# here; domain rules (unique ids, option ranges) are checked in
# survey_ingest after the shape passes.

SURVEY_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["questions", "responses"],
    "additionalProperties": False,
    "properties": {
        "questions": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "prompt", "kind", "attribute"],
                "additionalProperties": False,
                "properties": {
                    "id": {"type": "string", "minLength": 1},
                    "prompt": {"type": "string"},
                    "kind": {"type": "string"},
                    "attribute": {"type": "string"},
                    "options": {"type": "array", "items": {"type": "string"}},
                },
            },
        },
        "responses": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["candidate_id", "answers"],
                "additionalProperties": False,
                "properties": {
                    "candidate_id": {"type": "string", "minLength": 1},
                    "answers": {
                        "type": "object",
                        "additionalProperties": {
                            "type": ["integer", "string"],
                        },
                    },
                },
            },
        },
        "labels": {
            "type": "object",
            "additionalProperties": {"type": "string"},
        },
    },
}
