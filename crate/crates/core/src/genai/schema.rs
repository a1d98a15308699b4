//! The JSON schema sent with every prompt.

/// Response schema text; `docs/schema.md` reproduces it byte for byte.
pub const RESPONSE_SCHEMA: &str = r#"{
  "$schema": "https://json-schema.org/draft/2020-12/schema",
  "type": "object",
  "required": ["questions"],
  "additionalProperties": false,
  "properties": {
    "questions": {
      "type": "array",
      "minItems": 1,
      "maxItems": 10,
      "items": {
        "type": "object",
        "required": ["stem", "options", "correct_option_id", "topic"],
        "properties": {
          "stem": { "type": "string" },
          "options": {
            "type": "array",
            "minItems": 2,
            "maxItems": 8,
            "items": {
              "type": "object",
              "required": ["id", "latex", "feedback", "is_correct"],
              "properties": {
                "id": { "type": "string", "pattern": "^[A-Z]$" },
                "latex": { "type": "string" },
                "feedback": { "type": "string" },
                "is_correct": { "type": "boolean" }
              }
            }
          },
          "correct_option_id": { "type": "string", "pattern": "^[A-Z]$" },
          "topic": { "type": "string" }
        }
      }
    }
  }
}"#;
