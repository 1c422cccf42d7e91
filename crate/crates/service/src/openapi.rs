use serde_json::{json, Value};

fn error_responses() -> Value {
    json!({
        "400": {"description": "Invalid parameters", "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}}},
        "422": {"description": "No answer exists for these parameters", "content": {"application/json": {"schema": {"$ref": "#/components/schemas/Error"}}}}
    })
}

fn ok(schema: &str) -> Value {
    json!({"description": "OK", "content": {"application/json": {"schema": {"$ref": format!("#/components/schemas/{schema}")}}}})
}

fn post(summary: &str, request: &str, response: &str) -> Value {
    let mut responses = error_responses();
    responses["200"] = ok(response);
    json!({"post": {
        "summary": summary,
        "requestBody": {"required": true, "content": {"application/json": {"schema": {"$ref": format!("#/components/schemas/{request}")}}}},
        "responses": responses
    }})
}

fn query_param(name: &str, kind: &str, description: &str) -> Value {
    json!({"name": name, "in": "query", "required": false, "schema": {"type": kind}, "description": description})
}

/// OpenAPI 3 description of the `/v1` endpoints.
pub fn document() -> Value {
    let phi1 = json!({"oneOf": [{"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}, {"type": "string", "enum": ["optimal"]}]});
    let unit = json!({"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1});
    let mut orraf_responses = error_responses();
    orraf_responses["200"] = ok("OrrafAnswer");
    orraf_responses["413"] = json!({"description": "Grid side above 512"});
    let mut boundary_responses = error_responses();
    boundary_responses["200"] = ok("BoundariesAnswer");
    json!({
        "openapi": "3.0.3",
        "info": {"title": "suprec service", "version": env!("CARGO_PKG_VERSION")},
        "paths": {
            "/v1/power": post("Marginal power at a given sample size", "PowerQuery", "PowerAnswer"),
            "/v1/sample-size": post("Smallest sample size reaching a target power", "SampleSizeRequest", "SampleSizeResponse"),
            "/v1/design": post("Case fraction maximizing the signal size", "DesignRequest", "DesignAnswer"),
            "/v1/catalog": {"post": {
                "summary": "Parse a tab-separated catalog (id, raf, or, n_cases, n_controls)",
                "parameters": [
                    query_param("p", "integer", "when given, place each record on the power surface"),
                    query_param("alpha", "number", "family-wise level for the overlay (default 0.05)"),
                    query_param("per_subject_alleles", "integer", "1 or 2 (default 2)")
                ],
                "requestBody": {"required": true, "content": {"text/tab-separated-values": {"schema": {"type": "string"}}}},
                "responses": {"200": {"description": "Records, rejected rows and the survival-bias caveat flag"}, "400": {"description": "Missing or malformed header"}}
            }},
            "/v1/orraf": {"get": {
                "summary": "Marginal power over risk-allele frequency and odds ratio",
                "parameters": [
                    query_param("phi1", "string", "case fraction or 'optimal' (default 0.5)"),
                    query_param("n", "number", "observations per location (default 1e5)"),
                    query_param("n_subjects", "integer", "subjects, instead of n"),
                    query_param("per_subject_alleles", "integer", "1 or 2, with n_subjects (default 2)"),
                    query_param("p", "integer", "number of locations (default 100)"),
                    query_param("alpha", "number", "family-wise level (default 0.05)"),
                    query_param("f_min", "number", "default 0.001"),
                    query_param("f_max", "number", "default 0.5"),
                    query_param("f_steps", "integer", "log-spaced, at most 512 (default 100)"),
                    query_param("r_min", "number", "default 1"),
                    query_param("r_max", "number", "default 3"),
                    query_param("r_steps", "integer", "linear, at most 512 (default 100)"),
                    query_param("levels", "string", "comma-separated equi-signal levels")
                ],
                "responses": orraf_responses
            }},
            "/v1/boundaries": {"get": {
                "summary": "The five phase-transition curves on a sparsity grid",
                "parameters": [
                    query_param("beta_grid", "string", "comma-separated values in (0, 1)"),
                    query_param("beta_steps", "integer", "interior grid i/(n+1) (default 99)")
                ],
                "responses": boundary_responses
            }},
            "/v1/spec": {"get": {"summary": "This document", "responses": {"200": {"description": "OpenAPI JSON"}}}}
        },
        "components": {"schemas": {
            "Error": {"type": "object", "properties": {
                "error": {"type": "string"}, "message": {"type": "string"},
                "fields": {"type": "array", "items": {"type": "object", "properties": {"field": {"type": "string"}, "message": {"type": "string"}}}}
            }},
            "PowerQuery": {"type": "object", "required": ["p", "f", "R", "n_subjects"], "additionalProperties": false, "properties": {
                "p": {"type": "integer", "minimum": 2}, "alpha": unit.clone(), "f": unit.clone(),
                "R": {"type": "number", "exclusiveMinimum": 0}, "phi1": phi1.clone(),
                "n_subjects": {"type": "integer", "minimum": 1}, "per_subject_alleles": {"type": "integer", "enum": [1, 2]}
            }},
            "PowerAnswer": {"type": "object", "properties": {
                "query": {"$ref": "#/components/schemas/PowerQuery"}, "phi1_used": {"type": "number"}, "w2": {"type": "number"},
                "n_observations": {"type": "integer"}, "lambda": {"type": "number"}, "level": {"type": "number"},
                "threshold": {"type": "number"}, "power": {"type": "number"}, "r": {"type": "number"},
                "classification": {"type": "string", "enum": ["solvable", "unsolvable", "on_boundary"]},
                "boundary": {"type": "string"}
            }},
            "SampleSizeRequest": {"type": "object", "required": ["p", "f", "R"], "additionalProperties": false, "properties": {
                "p": {"type": "integer", "minimum": 2}, "fwer": unit.clone(), "f": unit.clone(),
                "R": {"type": "number", "exclusiveMinimum": 0}, "phi1": phi1,
                "fnr": unit.clone(), "target_power": unit.clone(), "per_subject_alleles": {"type": "integer", "enum": [1, 2]}
            }},
            "SampleSizeResponse": {"type": "object", "properties": {
                "query": {"type": "object"}, "phi1_used": {"type": "number"}, "w2": {"type": "number"},
                "n_observations": {"type": "integer"}, "n_subjects": {"type": "integer"}, "power_at_n": {"type": "number"},
                "n_asymptotic": {"type": "number"}, "n_asymptotic_observations": {"type": "number"}, "ratio_to_asymptotic": {"type": "number"}
            }},
            "DesignRequest": {"type": "object", "required": ["f", "R"], "additionalProperties": false, "properties": {
                "f": unit, "R": {"type": "number", "exclusiveMinimum": 0}
            }},
            "DesignAnswer": {"type": "object", "properties": {
                "query": {"$ref": "#/components/schemas/DesignRequest"}, "phi1_star": {"type": "number"},
                "w2_at_optimum": {"type": "number"}, "w2_balanced": {"type": "number"}
            }},
            "OrrafAnswer": {"type": "object", "properties": {
                "query": {"type": "object"}, "level": {"type": "number"},
                "f_grid": {"type": "array", "items": {"type": "number"}}, "r_grid": {"type": "array", "items": {"type": "number"}},
                "power": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "signal": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "boundary_contour": {"type": "array", "items": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}},
                "equi_signal": {"type": "object", "additionalProperties": {"type": "array"}}
            }},
            "BoundariesAnswer": {"type": "object", "properties": {
                "beta": {"type": "array", "items": {"type": "number"}},
                "detection": {"type": "array", "items": {"type": "number"}},
                "approx": {"type": "array", "items": {"type": "number"}},
                "exact_approx": {"type": "array", "items": {"type": "number"}},
                "approx_exact": {"type": "array", "items": {"type": "number"}},
                "exact": {"type": "array", "items": {"type": "number"}}
            }}
        }}
    })
}
