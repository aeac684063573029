import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from ..exceptions import DataLoadError, SchemaError
from ..ingest import Shape, dump_dataset, load_dataset, load_schema, load_schema_file, universe_digest
from ..kernel import Atom, Int, SetV, to_text
from ..universe import Universe
from .fixtures import SAMPLES, SIGNALLING, signalling

TERRITORY_SCHEMA = """
CARRIERS
  t_signal COLLECT
  t_interlocking = {ik1, ik2}
CONSTANTS
  territory : t_signal +-> t_interlocking FROM "territory.csv" COLS (signal, interlocking)
"""


class SchemaTests(SimpleTestCase):
    def test_relation_declaration(self):
        schema = load_schema(TERRITORY_SCHEMA)
        [territory] = schema.constants
        self.assertIs(territory.shape, Shape.RELATION)
        self.assertEqual(territory.arrow, "+->")
        self.assertEqual(territory.source.columns, ("signal", "interlocking"))
        self.assertTrue(territory.functional)

    def test_collected_carrier(self):
        schema = load_schema(TERRITORY_SCHEMA)
        self.assertTrue(schema.carrier("t_signal").collected)
        self.assertEqual(schema.carrier("t_interlocking").elements, ("ik1", "ik2"))

    def test_duplicate_constant(self):
        text = TERRITORY_SCHEMA + '  territory : POW(t_signal) FROM "other.csv" COLS (signal)\n'
        with self.assertRaises(SchemaError) as caught:
            load_schema(text)
        self.assertIn("duplicate declaration territory", str(caught.exception))

    def test_unknown_type_name(self):
        with self.assertRaises(SchemaError) as caught:
            load_schema(
                'CARRIERS\n  t_signal COLLECT\nCONSTANTS\n  x : t_track +-> INTEGER FROM "x.csv" COLS (a, b)\n'
            )
        self.assertIn("unknown type name t_track", str(caught.exception))

    def test_column_count_checked(self):
        with self.assertRaises(SchemaError) as caught:
            load_schema('CARRIERS\n  t_signal COLLECT\nCONSTANTS\n  x : t_signal <-> INTEGER FROM "x.csv" COLS (a)\n')
        self.assertIn("binds 2 column(s), 1 given", str(caught.exception))

    def test_sample_schema(self):
        schema = load_schema_file(SAMPLES / "signalling.bds")
        self.assertEqual(
            [c.name for c in schema.constants], ["territory", "linked", "protects", "track_length", "max_track_length"]
        )
        self.assertEqual(schema.files, ["linked.csv", "protection.csv", "territory.csv", "tracks.json"])


class LoadDatasetTests(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.path = Path(self.directory.name)

    def schema(self, text: str):
        return load_schema(text, str(self.path / "dataset.bds"))

    def write(self, name: str, text: str):
        (self.path / name).write_text(text, encoding="utf-8")

    def test_csv_relation(self):
        self.write("territory.csv", "signal,interlocking\ns1,ik1\ns2,ik1\n")
        universe = load_dataset(self.schema(TERRITORY_SCHEMA))
        self.assertEqual(to_text(universe.constants["territory"]), "{s1|->ik1,s2|->ik1}")
        self.assertEqual(to_text(universe.carriers["t_signal"]), "{s1,s2}")
        self.assertEqual(to_text(universe.carriers["t_interlocking"]), "{ik1,ik2}")

    def test_functionality_violation(self):
        self.write("territory.csv", "signal,interlocking\ns1,ik1\ns1,ik2\n")
        with self.assertRaises(DataLoadError) as caught:
            load_dataset(self.schema(TERRITORY_SCHEMA))
        self.assertIn("functionality violation in territory: s1 maps to ik1 and ik2", str(caught.exception))

    def test_atom_outside_enumerated_carrier(self):
        self.write("territory.csv", "signal,interlocking\ns1,ik9\n")
        with self.assertRaises(DataLoadError) as caught:
            load_dataset(self.schema(TERRITORY_SCHEMA))
        self.assertIn("atom ik9 not in carrier t_interlocking", str(caught.exception))

    def test_header_only_csv_gives_empty_set(self):
        self.write("signals.csv", "signal\n")
        schema = self.schema(
            'CARRIERS\n  t_signal COLLECT\nCONSTANTS\n  signals : POW(t_signal) FROM "signals.csv" COLS (signal)\n'
        )
        universe = load_dataset(schema)
        self.assertEqual(universe.constants["signals"], SetV())
        self.assertEqual(len(universe.carriers["t_signal"]), 0)

    def test_missing_file(self):
        with self.assertRaises(DataLoadError) as caught:
            load_dataset(self.schema(TERRITORY_SCHEMA))
        self.assertIn("missing file", str(caught.exception))

    def test_bad_integer(self):
        self.write("lengths.csv", "track,length\nt1,12.5\n")
        text = (
            "CARRIERS\n  t_track COLLECT\nCONSTANTS\n"
            '  lengths : t_track +-> INTEGER FROM "lengths.csv" COLS (track, length)\n'
        )
        with self.assertRaises(DataLoadError) as caught:
            load_dataset(self.schema(text))
        self.assertIn("'12.5' is not an integer", str(caught.exception))

    def test_data_path_overrides_schema_directory(self):
        elsewhere = self.path / "today"
        elsewhere.mkdir()
        (elsewhere / "territory.csv").write_text("signal,interlocking\ns7,ik2\n", encoding="utf-8")
        universe = load_dataset(self.schema(TERRITORY_SCHEMA), [elsewhere])
        self.assertEqual(to_text(universe.constants["territory"]), "{s7|->ik2}")

    def test_sample_dataset(self):
        schema = load_schema_file(SAMPLES / "signalling.bds")
        universe = load_dataset(schema)
        self.assertEqual(to_text(universe.constants["track_length"]), "{t1|->1200,t2|->800,t3|->950,t4|->600}")
        self.assertEqual(universe.constants["max_track_length"], Int(5000))
        self.assertIn(Atom("t_signal", "s3"), universe.carriers["t_signal"])
        self.assertEqual(load_dataset(schema), universe)

    def test_dump_and_reload(self):
        schema = load_schema_file(SAMPLES / "signalling.bds")
        universe = load_dataset(schema)
        dumped = dump_dataset(schema, universe, self.path / "dump")
        reloaded = load_dataset(load_schema_file(dumped.file))
        self.assertEqual(reloaded, universe)


class DigestTests(SimpleTestCase):
    def test_relation_and_scalar(self):
        universe = Universe(
            carriers={},
            constants={"pairs": SetV.of([Int(1), Int(2)]), "limit": Int(5)},
        )
        digest = universe_digest(universe)
        self.assertEqual(digest.total, 3)
        self.assertEqual(digest.constants, {"limit": 1, "pairs": 2})

    def test_empty_universe(self):
        self.assertEqual(universe_digest(Universe()).total, 0)

    def test_fixture_universe(self):
        digest = universe_digest(signalling())
        self.assertEqual(digest.carriers, {"t_interlocking": 1, "t_signal": 3})
        self.assertEqual(digest.constants, {"linked": 1, "territory": 2})
        self.assertEqual(load_schema(SIGNALLING).files, [])
