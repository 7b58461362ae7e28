import json
import random

import pytest

from matcheck.checker import check
from matcheck.composition import resolve
from matcheck.merger import (
    InternalInconsistency,
    MergeRefused,
    export_bom_csv,
    export_flat_json,
    flat_json_obj,
    merge,
)
from matcheck.model import NC, ComponentInstance, SchematicBlock

import gen
import oracles
from helpers import (
    attach,
    compose,
    draws,
    edge,
    gpio_port,
    i2c_port,
    inst,
    lib,
    power_port,
    rail,
    simple_block,
    uart_port,
)


def merged(doc, library, diagnostics=()):
    return merge(resolve(doc, library), diagnostics)


class TestNaming:
    def test_lone_instance_keeps_qualified_names(self):
        block = simple_block("blk", (gpio_port("A"), gpio_port("B")))
        library = lib(block)
        result = merged(compose(instances=(inst("m", block),)), library)
        assert set(result.nets) == {"m.A", "m.B"}
        assert result.nets["m.A"] == (("m.U1", "p1"),)
        assert [c.refdes for c in result.components] == ["m.U1"]
        assert result.provenance["m.U1"] == ("m", "blk", "1.0")

    def test_rail_name_wins_over_user_name(self):
        # a block may expose the same internal net as both a supply port
        # and a sense pin; the rail name then beats any edge label
        mix = simple_block("mix", (power_port("V", 3.0, 3.6, current=draws(0),
                                              net="NV"),
                                   gpio_port("SENSE", net="NV")))
        plain = simple_block("plain", (gpio_port("A"),))
        library = lib(mix, plain)
        doc = compose(instances=(inst("m", mix), inst("n", plain)),
                      rails=(rail("R33", 3.3, 3.3),),
                      attachments=(attach("m", "V", "R33"),),
                      edges=(edge("e1", ("m", "SENSE"), ("n", "A"),
                                  user_net_name="VCC_NAME"),))
        result = merged(doc, library)
        assert "R33" in result.nets
        assert "VCC_NAME" not in result.nets
        assert ("n.U1", "p1") in result.nets["R33"]

    def test_user_name_wins_over_qualified(self):
        block = simple_block("blk", (gpio_port("A"),))
        library = lib(block)
        doc = compose(instances=(inst("m", block), inst("n", block)),
                      edges=(edge("e1", ("m", "A"), ("n", "A"),
                                  user_net_name="SDA"),))
        result = merged(doc, library)
        assert set(result.nets) == {"SDA"}

    def test_duplicate_user_name_goes_to_smallest_class(self):
        block = simple_block("blk", (gpio_port("A"),))
        library = lib(block)
        doc = compose(
            instances=(inst("a", block), inst("b", block), inst("c", block),
                       inst("d", block)),
            edges=(edge("e2", ("c", "A"), ("d", "A"), user_net_name="SDA"),
                   edge("e1", ("a", "A"), ("b", "A"), user_net_name="SDA")))
        result = merged(doc, library)
        # the class whose fallback name sorts first claims the shared
        # label; the other keeps its qualified fallback
        assert set(result.nets) == {"SDA", "c.A"}
        assert result.nets["SDA"] == (("a.U1", "p1"), ("b.U1", "p1"))
        assert result.nets["c.A"] == (("c.U1", "p1"), ("d.U1", "p1"))

    def test_smallest_qualified_fallback(self):
        block = simple_block("blk", (gpio_port("Z"), gpio_port("A")))
        library = lib(block)
        doc = compose(instances=(inst("y", block), inst("x", block)),
                      edges=(edge("e1", ("y", "Z"), ("x", "A")),))
        result = merged(doc, library)
        # class members are x.A and y.Z; x.A sorts first
        assert "x.A" in result.nets
        assert "y.Z" not in result.nets

    def test_port_only_net_class_is_dropped(self):
        ghost = SchematicBlock(
            block_id="ghost", version="1.0",
            components=(ComponentInstance(refdes="U1", part_value="G",
                                          footprint="FP",
                                          pins=(("1", "NB"),)),),
            internal_nets=frozenset({"NA", "NB"}),
            ports=(gpio_port("A", net="NA"), gpio_port("B", net="NB")))
        library = lib(ghost)
        doc = compose(instances=(inst("m", ghost), inst("n", ghost)),
                      edges=(edge("e1", ("m", "A"), ("n", "A"),
                                  user_net_name="GHOSTNET"),))
        result = merged(doc, library)
        # the A-side class carries no pins, so it vanishes — even its
        # user-assigned name
        assert set(result.nets) == {"m.NB", "n.NB"}

    def test_nc_pins_stay_nc(self):
        block = SchematicBlock(
            block_id="blk", version="1.0",
            components=(ComponentInstance(refdes="U1", part_value="B",
                                          footprint="FP",
                                          pins=(("1", "NA"), ("2", NC))),),
            internal_nets=frozenset({"NA"}),
            ports=(gpio_port("A", net="NA"),))
        library = lib(block)
        result = merged(compose(instances=(inst("m", block),)), library)
        assert result.components[0].pins == (("1", "m.NA"), ("2", NC))
        assert NC not in result.nets


class TestStructure:
    def test_components_conserved_and_qualified(self):
        block = simple_block("blk", (gpio_port("A"), gpio_port("B")))
        library = lib(block)
        doc = compose(instances=(inst("m", block), inst("n", block)),
                      edges=(edge("e1", ("m", "A"), ("n", "B")),))
        result = merged(doc, library)
        assert [c.refdes for c in result.components] == ["m.U1", "n.U1"]
        total_pins = sum(len(pins) for pins in result.nets.values())
        assert total_pins == 4

    def test_matches_reachability_oracle(self):
        rng = random.Random(31)
        for _ in range(20):
            library = gen.random_library(rng)
            doc = gen.random_composition(rng, library)
            resolved = resolve(doc, library)
            result = merge(resolved, ())
            assert oracles.merged_partition(result) == \
                oracles.pin_partition(resolved)

    def test_two_rails_in_one_class_is_a_bug_not_a_diagnostic(self):
        dual = SchematicBlock(
            block_id="dual", version="1.0",
            components=(ComponentInstance(refdes="U1", part_value="D",
                                          footprint="FP",
                                          pins=(("1", "NV"),)),),
            internal_nets=frozenset({"NV"}),
            ports=(power_port("V1", 3.0, 3.6, current=draws(0), net="NV"),
                   power_port("V2", 3.0, 5.5, current=draws(0), net="NV")))
        library = lib(dual)
        doc = compose(instances=(inst("m", dual),),
                      rails=(rail("R1", 3.3, 3.3), rail("R2", 5, 5)),
                      attachments=(attach("m", "V1", "R1"),
                                   attach("m", "V2", "R2")))
        with pytest.raises(InternalInconsistency):
            merged(doc, library)
        assert issubclass(InternalInconsistency, AssertionError)


class TestRefusal:
    def test_error_diagnostics_block_merge(self):
        block = simple_block("blk", (uart_port("U", "dte", required=True),))
        library = lib(block)
        resolved = resolve(compose(instances=(inst("m", block),)), library)
        diags = check(resolved)
        assert [d.code for d in diags] == ["E006"]
        with pytest.raises(MergeRefused) as err:
            merge(resolved, diags)
        assert err.value.codes == ["E006"]
        assert all(d.severity == "error" for d in err.value.blocking)

    def test_warnings_do_not_block(self):
        ctrl = simple_block("ctrl", (i2c_port("I", "controller"),))
        periph = simple_block("p48", (i2c_port("I", "peripheral",
                                               addresses={0x48}),))
        library = lib(ctrl, periph)
        doc = compose(instances=(inst("c", ctrl), inst("s", periph)),
                      edges=(edge("e1", ("c", "I"), ("s", "I")),))
        resolved = resolve(doc, library)
        diags = check(resolved)
        assert [d.code for d in diags] == ["W103"]
        result = merge(resolved, diags)
        assert set(result.nets) == {"c.I"}


class TestExports:
    def design(self):
        block = simple_block("blk", (gpio_port("A"), gpio_port("B")))
        library = lib(block)
        doc = compose(instances=(inst("m", block), inst("n", block)),
                      edges=(edge("e1", ("m", "A"), ("n", "A"),
                                  user_net_name="SIG"),))
        return doc, library

    def test_flat_json_shape(self):
        doc, library = self.design()
        data = flat_json_obj(merged(doc, library))
        assert set(data) == {"schema", "design_name", "components", "nets",
                             "provenance"}
        assert data["design_name"] == "design"
        assert data["nets"]["SIG"] == [["m.U1", "p1"], ["n.U1", "p1"]]
        assert data["provenance"]["n.U1"] == {
            "instance": "n", "block_id": "blk", "version": "1.0"}

    def test_flat_json_bytes_canonical(self):
        doc, library = self.design()
        blob = export_flat_json(merged(doc, library))
        assert blob.endswith(b"\n")
        assert json.loads(blob) == flat_json_obj(merged(doc, library))
        assert blob == export_flat_json(merged(doc, library))

    def test_flat_json_ignores_input_order(self):
        block = simple_block("blk", (gpio_port("A"), gpio_port("B")))
        library = lib(block)
        forward = compose(
            instances=(inst("m", block), inst("n", block)),
            rails=(rail("GND", 0, 0), rail("V", 3.3, 3.3)),
            edges=(edge("e1", ("m", "A"), ("n", "A")),
                   edge("e2", ("m", "B"), ("n", "B"))))
        backward = compose(
            instances=(inst("n", block), inst("m", block)),
            rails=(rail("V", 3.3, 3.3), rail("GND", 0, 0)),
            edges=(edge("e2", ("n", "B"), ("m", "B")),
                   edge("e1", ("n", "A"), ("m", "A"))))
        assert export_flat_json(merged(forward, library)) == \
            export_flat_json(merged(backward, library))

    def test_bom_rows_sorted_with_crlf(self):
        block_a = simple_block("alpha", (gpio_port("A"),))
        block_b = simple_block("beta", (gpio_port("A"),))
        library = lib(block_a, block_b)
        doc = compose(instances=(inst("z", block_a), inst("a", block_b)))
        blob = export_bom_csv(merged(doc, library))
        assert blob == (b"refdes,part_value,footprint\r\n"
                        b"a.U1,BETA,FP\r\n"
                        b"z.U1,ALPHA,FP\r\n")

    def test_bom_row_count_matches_components(self):
        doc, library = self.design()
        result = merged(doc, library)
        lines = export_bom_csv(result).decode("utf-8").splitlines()
        assert len(lines) == 1 + len(result.components)
