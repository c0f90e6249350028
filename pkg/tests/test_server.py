"""
MCP Server Tests
================

Calls the tools, resources and prompt through an in-memory fastmcp client.
"""

import json

import jsonschema
import pytest
from fastmcp import Client

from qsoliton.manifolds import CATALOG
from server import MAX_SAMPLES, mcp


async def _call(name: str, arguments: dict) -> object:
    async with Client(mcp) as client:
        result = await client.call_tool(name, arguments)
    return json.loads(result.content[0].text)


# ============================================================================
# Tools
# ============================================================================


class TestTools:
    @pytest.mark.asyncio
    async def test_list_examples(self):
        examples = await _call("list_examples", {})
        assert [e["name"] for e in examples] == list(CATALOG)
        gaussian = examples[0]
        assert "lambda" in gaussian["parameters"]["properties"]

    @pytest.mark.asyncio
    async def test_verify_example(self, report_schema):
        report = await _call(
            "verify_example",
            {
                "name": "cylinder_shrinker",
                "params": {"k": 2},
                "checks": ["soliton_residual", "hamilton_scalar"],
                "samples": 8,
            },
        )
        jsonschema.validate(report, report_schema)
        assert report["status"] == "ok"
        assert report["expected"] == {"soliton_residual": "pass", "hamilton_scalar": "pass"}

    @pytest.mark.asyncio
    async def test_verify_chart(self, cylinder_chart_text, report_schema):
        report = await _call(
            "verify_chart",
            {"chart": cylinder_chart_text, "checks": ["soliton_residual"], "samples": 8},
        )
        jsonschema.validate(report, report_schema)
        assert report["target"] == "<cylinder>"
        assert report["checks"][0]["verdict"] == "pass"

    @pytest.mark.asyncio
    @pytest.mark.parametrize(
        "name,arguments,message",
        [
            ("verify_example", {"name": "torus"}, "Unknown example 'torus'"),
            (
                "verify_example",
                {"name": "gaussian", "samples": MAX_SAMPLES + 1},
                f"samples must not exceed {MAX_SAMPLES}",
            ),
            ("verify_example", {"name": "gaussian", "checks": ["ricci_flow"]}, "Unknown checks"),
            ("verify_chart", {"chart": "coordinates = x\nbogus = 1\n"}, "unknown key 'bogus'"),
            ("ricatti", {"phi0": -1.0, "s_max": -2.0}, "s_max must be positive"),
        ],
    )
    async def test_invalid_input_returns_error(self, name, arguments, message):
        result = await _call(name, arguments)
        assert message in result["error"]

    @pytest.mark.asyncio
    async def test_ricatti_blow_up(self):
        result = await _call("ricatti", {"phi0": -2.0, "s_max": 3.0})
        assert result["blow_up"] is True
        assert result["blow_up_at"] == pytest.approx(0.5, abs=1e-6)
        assert result["closed_form_error"] < 1e-8


# ============================================================================
# Resources and prompts
# ============================================================================


class TestResources:
    @pytest.mark.asyncio
    async def test_schema_resource(self, report_schema):
        async with Client(mcp) as client:
            contents = await client.read_resource("qsoliton://schema/run-report")
        assert json.loads(contents[0].text) == report_schema

    @pytest.mark.asyncio
    async def test_example_resource(self):
        async with Client(mcp) as client:
            contents = await client.read_resource("qsoliton://examples/round_sphere")
        record = json.loads(contents[0].text)
        assert record["name"] == "round_sphere"
        assert record["expected"]["soliton_residual"] == "pass"

    @pytest.mark.asyncio
    async def test_unknown_example_resource(self):
        async with Client(mcp) as client:
            contents = await client.read_resource("qsoliton://examples/torus")
        assert "Unknown example" in json.loads(contents[0].text)["error"]

    @pytest.mark.asyncio
    async def test_review_prompt(self):
        async with Client(mcp) as client:
            prompt = await client.get_prompt("review_report", {"report": '{"status": "ok"}'})
        text = prompt.messages[0].content.text
        assert '{"status": "ok"}' in text
        assert "mismatches" in text
