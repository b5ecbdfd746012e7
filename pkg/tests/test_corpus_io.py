import unicodedata

import pytest

from parishrec import synth
from parishrec.corpus_io import (ExportDocument, ParseError, RegisterDocument,
                                 SchemaError, compute_summary, read_export,
                                 read_register, write_export, write_register)
from parishrec.model import (Act, ActFragment, Entity, FieldValue, PersonName,
                             StructuredDate, StructuredRecord, ValidityStatus)
from conftest import rect

MINIMAL_XML = """<?xml version='1.0' encoding='utf-8'?>
<register schema_version="1" register_id="R1" language_hint="fr">
  <page page_id="p1" width="1200" height="1800" orientation="portrait">
    <line id="l1" points="10,10 200,10 200,50 10,50" text="Le trente janvier"/>
  </page>
</register>
"""


def sample_record(act_id="a1"):
    frag = ActFragment("f1", "p1", "full", rect(0, 0, 100, 100), ("l1", "l2"), 0)
    ent = Entity("PER", "l1", 0, 4, "Jean")
    act = Act(act_id, (frag,), "birth", "Jean fut baptisé\nce jour", (ent,))
    record = StructuredRecord(act_id, "birth", {
        "subject_name": FieldValue("Jean", PersonName(first_names=["Jean"]), ("l1:0-4",)),
        "record_date": FieldValue("le trois mars mil neuf cent",
                                  StructuredDate(1900, 3, 3)),
        "father_name": FieldValue("Pierre"),
        "mother_name": FieldValue("Marie"),
    }, (FieldValue("cultivateur", "cultivateur"),), ValidityStatus("valid"))
    return act, record


class TestReadRegister:
    def test_minimal_document(self):
        doc = read_register(MINIMAL_XML)
        assert doc.register_id == "R1"
        assert len(doc.pages) == 1
        assert doc.pages[0].lines[0].text == "Le trente janvier"
        assert doc.pages[0].entities == ()

    def test_act_class_start_becomes_fragment(self):
        xml = MINIMAL_XML.replace(
            "</page>",
            '<act id="f1" class="start" seq="0" points="5,5 300,5 300,60 5,60" '
            'lines="l1"/></page>')
        doc = read_register(xml)
        assert len(doc.fragments) == 1
        assert doc.fragments[0].act_class == "start"
        assert doc.fragments[0].page_id == "p1"

    def test_truncated_file_is_parse_error(self):
        with pytest.raises(ParseError) as err:
            read_register(MINIMAL_XML[:120])
        assert err.value.line is not None

    def test_malformed_markup_reports_position(self):
        with pytest.raises(ParseError):
            read_register("<register schema_version='1'><page></register>")

    def test_unknown_schema_version(self):
        with pytest.raises(SchemaError):
            read_register(MINIMAL_XML.replace('schema_version="1"',
                                              'schema_version="99"'))

    def test_entity_surface_derived_from_slice(self):
        xml = MINIMAL_XML.replace(
            "/>", '><entity tag="DATE" start="3" end="17"/></line>', 1)
        doc = read_register(xml)
        assert doc.pages[0].entities[0].surface == "trente janvier"

    def test_schema_violations_collected(self):
        xml = MINIMAL_XML.replace(
            "/>", '><entity tag="PER" start="5" end="99"/></line>', 1)
        with pytest.raises(SchemaError) as err:
            read_register(xml)
        assert any("offsets" in v for v in err.value.violations)

    def test_violation_list_capped_at_twenty(self):
        lines = "".join(
            f'<line id="l{i}" points="0,0 1,1" text=""/>' for i in range(30))
        xml = (f'<register schema_version="1" register_id="R1">'
               f'<page page_id="p1" width="100" height="100">{lines}</page></register>')
        with pytest.raises(SchemaError) as err:
            read_register(xml)
        assert len(err.value.violations) == 20

    def test_nfc_normalization_on_read(self):
        decomposed = unicodedata.normalize("NFD", "baptisé")
        xml = MINIMAL_XML.replace("Le trente janvier", decomposed)
        doc = read_register(xml)
        assert doc.pages[0].lines[0].text == "baptisé"

    def test_unknown_elements_preserved_in_extensions(self):
        xml = MINIMAL_XML.replace("</register>",
                                  '<custom source="scanner"/></register>')
        doc = read_register(xml)
        assert any("custom" in v for v in doc.extensions.values())


class TestRegisterRoundTrip:
    def test_xml_round_trip(self):
        doc = synth.make_register("RT1", __import__("random").Random(3))
        assert read_register(write_register(doc, "xml")) == doc

    def test_jsonl_round_trip(self):
        doc = synth.make_register("RT2", __import__("random").Random(4))
        assert read_register(write_register(doc, "jsonl")) == doc

    def test_extensions_survive_round_trip(self):
        doc = read_register(MINIMAL_XML.replace(
            "</register>", '<custom source="scanner"/></register>'))
        again = read_register(write_register(doc, "xml"))
        assert again.extensions == doc.extensions

    def test_write_is_deterministic(self):
        doc = synth.make_register("RT3", __import__("random").Random(5))
        assert write_register(doc, "xml") == write_register(doc, "xml")
        assert write_register(doc, "jsonl") == write_register(doc, "jsonl")


class TestExport:
    def test_empty_register_zero_counts(self):
        doc = ExportDocument("R1", [])
        data = write_export(doc)
        again = read_export(data)
        assert again.acts == ()
        assert sum(again.summary["acts_by_type"].values()) == 0
        assert sum(again.summary["records_by_status"].values()) == 0

    def test_one_birth_act_xml_markers(self):
        doc = ExportDocument("R1", [sample_record()])
        text = write_export(doc).decode("utf-8")
        assert 'type="birth"' in text
        assert 'status="valid"' in text

    def test_round_trip_xml(self):
        doc = ExportDocument("R1", [sample_record("a1"), sample_record("a2")],
                             config_hash="cafe")
        assert read_export(write_export(doc, "xml")) == doc

    def test_round_trip_jsonl(self):
        doc = ExportDocument("R1", [sample_record("a1")], config_hash="cafe")
        assert read_export(write_export(doc, "jsonl")) == doc

    def test_two_fragment_act_references_both_pages(self):
        f1 = ActFragment("f1", "p1", "start", rect(0, 0, 10, 10), ("l1",), 0)
        f2 = ActFragment("f2", "p2", "end", rect(0, 0, 10, 10), ("l2",), 0)
        act = Act("a1", (f1, f2), "birth", "x\ny")
        record = StructuredRecord("a1", "birth", {}, (), ValidityStatus("pending"))
        text = write_export(ExportDocument("R1", [(act, record)])).decode("utf-8")
        assert 'page_id="p1"' in text and 'page_id="p2"' in text
        again = read_export(text.encode("utf-8"))
        assert again.acts[0][0].fragments == (f1, f2)

    def test_acts_sorted_by_id(self):
        doc = ExportDocument("R1", [sample_record("b"), sample_record("a")])
        text = write_export(doc).decode("utf-8")
        assert text.index('id="a"') < text.index('id="b"')

    def test_deterministic_bytes(self):
        doc = ExportDocument("R1", [sample_record()])
        assert write_export(doc) == write_export(doc)
        assert write_export(doc, "jsonl") == write_export(doc, "jsonl")

    def test_summary_mismatch_rejected(self):
        doc = ExportDocument("R1", [sample_record()])
        data = write_export(doc).decode("utf-8")
        broken = data.replace('birth="1"', 'birth="7"')
        with pytest.raises(SchemaError):
            read_export(broken)

    def test_unknown_status_rejected(self):
        doc = ExportDocument("R1", [sample_record()])
        data = write_export(doc).decode("utf-8")
        broken = data.replace('status="valid"', 'status="sideways"')
        with pytest.raises(SchemaError):
            read_export(broken)

    def test_unrepresentable_character_names_act(self):
        act, record = sample_record()
        bad = Act(act.act_id, act.fragments, act.act_type, "bad \x07 bell",
                  act.entities)
        with pytest.raises(ValueError) as err:
            write_export(ExportDocument("R1", [(bad, record)]))
        assert "a1" in str(err.value)

    def test_summary_counts_recomputed(self):
        acts = [sample_record("a1"), sample_record("a2")]
        summary = compute_summary(acts)
        assert summary["acts_by_type"]["birth"] == 2
        assert summary["records_by_status"]["valid"] == 2


def test_register_document_defensive_copies():
    doc = RegisterDocument("R1", [], extensions={"a": "b"})
    assert doc.extensions == {"a": "b"}
    assert doc.pages == ()
