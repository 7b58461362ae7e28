import json
import random

import pytest

from matcheck.parsing import (
    ParseFailure,
    parse_block,
    parse_composition,
    serialize_block,
    serialize_composition,
)

import gen
from helpers import compose, edge, inst, rail, simple_block, gpio_port


def block_doc(**over):
    doc = {
        "schema": 1,
        "block_id": "blk",
        "version": "1.0",
        "components": [
            {"refdes": "U1", "part_value": "X", "footprint": "FP",
             "pins": [{"pin": "1", "net": "A"}, {"pin": "2", "net": "G"}]}
        ],
        "nets": ["A", "G"],
        "ports": [
            {"name": "A", "iface": {"kind": "gpio"}, "bound_net": "A"},
            {"name": "G", "iface": {"kind": "ground"}, "bound_net": "G",
             "required": True},
        ],
    }
    doc.update(over)
    return doc


def comp_doc(**over):
    doc = {
        "schema": 1,
        "name": "design",
        "instances": [{"instance_name": "m", "block_id": "blk", "version": "1.0"}],
        "rails": [{"name": "GND", "voltage": {"min_volts": 0, "max_volts": 0}}],
        "attachments": [],
        "edges": [],
    }
    doc.update(over)
    return doc


def block_findings(doc):
    with pytest.raises(ParseFailure) as excinfo:
        parse_block(doc if isinstance(doc, (bytes, str)) else json.dumps(doc))
    return [(d.code, d.path) for d in excinfo.value.diagnostics]


def comp_findings(doc):
    with pytest.raises(ParseFailure) as excinfo:
        parse_composition(doc if isinstance(doc, (bytes, str)) else json.dumps(doc))
    return [(d.code, d.path) for d in excinfo.value.diagnostics]


class TestBlockRoundTrip:
    def test_parse_inverts_serialize(self):
        block = simple_block("blk", (gpio_port("A"), gpio_port("B")))
        assert parse_block(serialize_block(block)) == block

    def test_serialization_is_canonical_bytes(self):
        block = simple_block("blk", (gpio_port("A"),))
        data = serialize_block(block)
        assert serialize_block(parse_block(data)) == data
        assert data.endswith(b"\n")

    def test_key_and_array_order_invisible(self):
        doc = block_doc()
        shuffled = {k: doc[k] for k in reversed(list(doc))}
        shuffled["ports"] = list(reversed(shuffled["ports"]))
        shuffled["nets"] = list(reversed(shuffled["nets"]))
        assert parse_block(json.dumps(shuffled)) == parse_block(json.dumps(doc))

    def test_serializer_emits_optional_keys(self):
        block = simple_block("blk", (gpio_port("A"),))
        obj = json.loads(serialize_block(block))
        assert obj["configs"] == []
        assert obj["ports"][0]["iface"]["level"] is None
        assert obj["ports"][0]["iface"]["range"] is None

    def test_null_means_absent(self):
        doc = block_doc(configs=None, layout_hint=None)
        doc["ports"][0]["iface"]["level"] = None
        doc["ports"][0]["required"] = None
        block = parse_block(json.dumps(doc))
        assert block.configs == ()
        assert not block.port("A").required

    def test_generated_blocks_round_trip(self):
        rng = random.Random(1201)
        for i in range(30):
            block = gen.random_block(rng, f"b{i}", with_configs=True)
            data = serialize_block(block)
            assert parse_block(data) == block
            assert serialize_block(parse_block(data)) == data


class TestBlockFindings:
    def test_unparseable_text(self):
        assert block_findings("{") == [("P001", "")]

    def test_non_object_root(self):
        assert block_findings("[1]") == [("P001", "")]

    def test_non_utf8(self):
        assert block_findings(b"\xff\xfe{}") == [("P001", "")]

    def test_nan_rejected(self):
        assert block_findings('{"schema": NaN}')[0] == ("P001", "")

    def test_duplicate_json_key(self):
        assert block_findings('{"schema": 1, "schema": 1}') == [("P004", "")]

    def test_wrong_schema_version(self):
        assert ("P001", "/schema") in block_findings(block_doc(schema=2))

    def test_missing_required_key(self):
        doc = block_doc()
        del doc["version"]
        assert block_findings(doc) == [("P001", "")]

    def test_unknown_root_key(self):
        assert block_findings(block_doc(colour="red")) == [("P002", "/colour")]

    def test_unknown_port_key(self):
        doc = block_doc()
        doc["ports"][0]["swizzle"] = 1
        assert block_findings(doc) == [("P002", "/ports/0/swizzle")]

    def test_pin_references_undeclared_net(self):
        doc = block_doc()
        doc["components"][0]["pins"][0]["net"] = "Z"
        assert block_findings(doc) == [("P003", "/components/0/pins/0/net")]

    def test_port_binds_undeclared_net(self):
        doc = block_doc()
        doc["ports"][0]["bound_net"] = "Z"
        assert block_findings(doc) == [("P003", "/ports/0/bound_net")]

    def test_override_targets_undeclared_port(self):
        doc = block_doc(configs=[{"name": "o", "variants": [
            {"name": "v", "default": True,
             "port_overrides": [{"port": "GHOST", "required": True}]}]}])
        assert block_findings(doc) == [("P003", "/configs/0")]

    def test_toggle_targets_undeclared_component(self):
        doc = block_doc(configs=[{"name": "o", "variants": [
            {"name": "v", "default": True,
             "component_toggles": [{"refdes": "GHOST", "enabled": False}]}]}])
        assert block_findings(doc) == [("P003", "/configs/0")]

    def test_duplicate_net(self):
        assert block_findings(block_doc(nets=["A", "G", "A"])) == [("P004", "/nets/2")]

    def test_duplicate_refdes(self):
        doc = block_doc()
        doc["components"].append(dict(doc["components"][0]))
        assert block_findings(doc) == [("P004", "/components/1/refdes")]

    def test_duplicate_port_name(self):
        doc = block_doc()
        doc["ports"].append(dict(doc["ports"][0]))
        assert block_findings(doc) == [("P004", "/ports/2/name")]

    def test_duplicate_pin(self):
        doc = block_doc()
        doc["components"][0]["pins"][1]["pin"] = "1"
        assert block_findings(doc) == [("P004", "/components/0/pins/1/pin")]

    def test_duplicate_i2c_address(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {"kind": "i2c", "role": "peripheral",
                                    "addresses": [7, 7]}
        assert block_findings(doc) == [("P004", "/ports/0/iface/addresses/1")]

    def test_invalid_net_name(self):
        doc = block_doc(nets=["a.b", "G"])
        codes = block_findings(doc)
        assert ("P005", "/nets/0") in codes

    def test_invalid_block_id(self):
        assert block_findings(block_doc(block_id="no space")) == [("P005", "/block_id")]

    def test_empty_version(self):
        assert block_findings(block_doc(version="")) == [("P005", "/version")]

    def test_reversed_voltage_range(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {
            "kind": "power", "range": {"min_volts": 5, "max_volts": 3},
            "current": {"kind": "draws", "max_milliamps": 1}}
        assert block_findings(doc) == [("P005", "/ports/0/iface/range")]

    def test_power_iface_missing_range(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {"kind": "power",
                                    "current": {"kind": "draws", "max_milliamps": 1}}
        assert block_findings(doc) == [("P001", "/ports/0/iface")]

    def test_ground_iface_rejects_extras(self):
        doc = block_doc()
        doc["ports"][1]["iface"] = {"kind": "ground",
                                    "range": {"min_volts": 0, "max_volts": 0}}
        assert block_findings(doc) == [("P002", "/ports/1/iface/range")]

    def test_gpio_level_and_range_conflict(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {
            "kind": "gpio",
            "level": {"vil_max": 0.8, "vih_min": 2.0, "vol_max": 0.4, "voh_min": 2.9},
            "range": {"min_volts": 0, "max_volts": 3.3}}
        assert block_findings(doc) == [("P005", "/ports/0/iface")]

    def test_unknown_iface_kind(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {"kind": "pwm"}
        assert block_findings(doc) == [("P005", "/ports/0/iface/kind")]

    def test_addresses_on_controller(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {"kind": "i2c", "role": "controller",
                                    "addresses": [7]}
        assert block_findings(doc) == [("P005", "/ports/0/iface/addresses")]

    def test_out_of_range_address(self):
        doc = block_doc()
        doc["ports"][0]["iface"] = {"kind": "i2c", "role": "peripheral",
                                    "addresses": [200]}
        assert block_findings(doc) == [("P005", "/ports/0/iface/addresses/0")]

    def test_unreferenced_net(self):
        assert block_findings(block_doc(nets=["A", "G", "L"])) == [("P005", "/nets/2")]

    def test_no_default_variant(self):
        doc = block_doc(configs=[{"name": "o", "variants": [
            {"name": "v1"}, {"name": "v2"}]}])
        assert block_findings(doc) == [("P005", "/configs/0/variants")]

    def test_multiple_findings_collected(self):
        doc = block_doc(nets=["A", "G", "A"], colour="red")
        found = block_findings(doc)
        assert ("P004", "/nets/2") in found
        assert ("P002", "/colour") in found


class TestCompositionRoundTrip:
    def test_parse_inverts_serialize(self):
        doc = compose(
            name="d",
            instances=(inst("m", simple_block("blk", (gpio_port("A"),))),),
            rails=(rail("GND", 0, 0), rail("V1", 3.3, 3.3, parent=None,
                                           supply_milliamps=100)),
        )
        assert parse_composition(serialize_composition(doc)) == doc

    def test_layout_hint_round_trips_untouched(self):
        raw = comp_doc(layout_hint={"m": {"x": 10, "y": -4}, "zoom": 1.5})
        doc = parse_composition(json.dumps(raw))
        assert doc.layout_hint == {"m": {"x": 10, "y": -4}, "zoom": 1.5}
        again = parse_composition(serialize_composition(doc))
        assert again.layout_hint == doc.layout_hint

    def test_generated_compositions_round_trip(self):
        rng = random.Random(1301)
        for _ in range(30):
            library = gen.random_library(rng)
            doc = gen.random_composition(rng, library)
            data = serialize_composition(doc)
            assert parse_composition(data) == doc
            assert serialize_composition(parse_composition(data)) == data

    def test_serializer_emits_null_optionals(self):
        doc = compose(name="d", rails=(rail("GND", 0, 0),))
        obj = json.loads(serialize_composition(doc))
        assert obj["rails"][0]["parent"] is None
        assert obj["rails"][0]["supply_milliamps"] is None
        assert obj["layout_hint"] is None


class TestCompositionFindings:
    def test_missing_name(self):
        doc = comp_doc()
        del doc["name"]
        assert comp_findings(doc) == [("P001", "")]

    def test_duplicate_instance(self):
        doc = comp_doc()
        doc["instances"].append(dict(doc["instances"][0]))
        assert comp_findings(doc) == [("P010", "/instances/1/instance_name")]

    def test_invalid_instance_name(self):
        doc = comp_doc()
        doc["instances"][0]["instance_name"] = "2bad"
        assert comp_findings(doc) == [("P005", "/instances/0/instance_name")]

    def test_invalid_selection(self):
        doc = comp_doc()
        doc["instances"][0]["config_selections"] = {"opt": 5}
        assert comp_findings(doc) == [("P005", "/instances/0/config_selections/opt")]

    def test_duplicate_rail(self):
        doc = comp_doc()
        doc["rails"].append(dict(doc["rails"][0]))
        assert comp_findings(doc) == [("P004", "/rails/1/name")]

    def test_reversed_rail_voltage(self):
        doc = comp_doc()
        doc["rails"][0]["voltage"] = {"min_volts": 2, "max_volts": 1}
        assert comp_findings(doc) == [("P005", "/rails/0/voltage")]

    def test_negative_supply(self):
        doc = comp_doc()
        doc["rails"][0]["supply_milliamps"] = -5
        assert comp_findings(doc) == [("P005", "/rails/0/supply_milliamps")]

    def test_unknown_parent_rail(self):
        doc = comp_doc()
        doc["rails"].append({"name": "V1",
                             "voltage": {"min_volts": 3, "max_volts": 3},
                             "parent": "GHOST"})
        assert comp_findings(doc) == [("P003", "/rails/1")]

    def test_rail_cycle(self):
        doc = comp_doc(rails=[
            {"name": "A", "voltage": {"min_volts": 1, "max_volts": 1},
             "parent": "B"},
            {"name": "B", "voltage": {"min_volts": 2, "max_volts": 2},
             "parent": "A"},
        ])
        found = comp_findings(doc)
        assert found == [("P011", "/rails")]

    def test_attachment_to_unknown_instance(self):
        doc = comp_doc(attachments=[
            {"instance_name": "ghost", "port_name": "P", "rail_name": "GND"}])
        assert comp_findings(doc) == [("P003", "/attachments/0/instance_name")]

    def test_attachment_to_unknown_rail(self):
        doc = comp_doc(attachments=[
            {"instance_name": "m", "port_name": "P", "rail_name": "V9"}])
        assert comp_findings(doc) == [("P003", "/attachments/0/rail_name")]

    def test_port_attached_twice(self):
        att = {"instance_name": "m", "port_name": "P", "rail_name": "GND"}
        doc = comp_doc(attachments=[att, dict(att)])
        assert comp_findings(doc) == [("P004", "/attachments/1")]

    def test_edge_to_unknown_instance(self):
        doc = comp_doc(edges=[
            {"edge_id": "e1", "endpoints": [["ghost", "P"], ["m", "P"]]}])
        assert comp_findings(doc) == [("P003", "/edges/0/endpoints/0/0")]

    def test_self_edge(self):
        doc = comp_doc(edges=[
            {"edge_id": "e1", "endpoints": [["m", "P"], ["m", "P"]]}])
        assert comp_findings(doc) == [("P005", "/edges/0/endpoints")]

    def test_malformed_endpoint(self):
        doc = comp_doc(edges=[
            {"edge_id": "e1", "endpoints": [["m"], ["m", "P"]]}])
        assert comp_findings(doc) == [("P005", "/edges/0/endpoints/0")]

    def test_wrong_endpoint_count(self):
        doc = comp_doc(edges=[{"edge_id": "e1", "endpoints": [["m", "P"]]}])
        assert comp_findings(doc) == [("P005", "/edges/0/endpoints")]

    def test_duplicate_edge_id(self):
        doc = comp_doc(edges=[
            {"edge_id": "e1", "endpoints": [["m", "P"], ["m", "Q"]]},
            {"edge_id": "e1", "endpoints": [["m", "R"], ["m", "S"]]},
        ])
        assert comp_findings(doc) == [("P004", "/edges/1/edge_id")]

    def test_user_net_name_collides_with_rail(self):
        doc = comp_doc(edges=[
            {"edge_id": "e1", "endpoints": [["m", "P"], ["m", "Q"]],
             "user_net_name": "GND"}])
        assert comp_findings(doc) == [("P004", "/edges/0/user_net_name")]


class TestFuzzSmoke:
    def test_parsers_total_over_garbage(self):
        rng = random.Random(1401)
        seeds = [
            serialize_block(gen.random_block(rng, "seed", with_configs=True)),
            serialize_composition(
                gen.random_composition(rng, gen.random_library(rng))),
            json.dumps(block_doc()).encode(),
            json.dumps(comp_doc()).encode(),
        ]
        for _ in range(300):
            buffer = gen.fuzz_buffer(rng, seeds)
            for parser in (parse_block, parse_composition):
                try:
                    parser(buffer)
                except ParseFailure:
                    pass
