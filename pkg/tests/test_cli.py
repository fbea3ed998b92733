import io
import json
from pathlib import Path

from wsa import cli

DATA = Path(__file__).resolve().parent.parent / "data"


def run(*argv, stdin=None):
    out = io.StringIO()
    if stdin is not None:
        args = cli.build_parser().parse_args(list(argv))
        code = cli.cmd_repl(args, out, io.StringIO(stdin))
    else:
        code = cli.main(list(argv), out)
    return code, out.getvalue()


def test_eval_company_query():
    code, text = run("eval", "--db", str(DATA / "company.json"), "--query", str(DATA / "company.wsa"))
    assert code == 0
    assert "1 possible answer(s)" in text and "c1" in text


def test_eval_structured():
    code, text = run("eval", "--db", str(DATA / "company.json"), "--expr", "repairkey[]({0} U {1})",
                     "--format", "structured")
    assert code == 0
    answers = json.loads(text)["answers"]
    assert sorted(a["tuples"] for a in answers) == [[["#0"]], [["#1"]]]


def test_eval_modes():
    code, text = run("eval", "--expr", "repairkey[]({0} U {1})", "--mode", "possible")
    assert code == 0 and text.count("Result") == 1
    code, text = run("eval", "--expr", "repairkey[]({0} U {1})", "--mode", "certain")
    assert code == 0 and "0" not in text.split("\n", 2)[2]


def test_worlds_table_for_company_script():
    code, text = run("worlds", "--db", str(DATA / "company.json"), "--query", str(DATA / "company.wsa"))
    assert code == 0
    assert text.startswith("5 world(s)")
    first = text.split("== world 2 ==")[0]
    assert first.index("U |") < first.index("V |") < first.index("W |") < first.index("Result |")


def test_compile_is_stable():
    args = ("compile", "--so", str(DATA / "three_color.so"), "--db", str(DATA / "triangle.json"),
            "--mode", "no-defs", "--format", "structured")
    code, a = run(*args)
    assert code == 0
    assert run(*args)[1] == a


def test_compile_with_defs_without_db():
    code, text = run("compile", "--so", str(DATA / "qbf.so"), "--db", str(DATA / "qbf_instance.json"))
    assert code == 0 and "let" in text


def test_translate():
    code, text = run("translate", "--expr", "repairkey[]({0} U {1})")
    assert code == 0 and "R_Q" in text


def test_expand_rep():
    code, text = run("expand-rep", "--db", str(DATA / "representation.json"))
    assert code == 0 and text.startswith("3 world(s)")


def test_syntax_and_format_errors():
    assert run("eval", "--expr", "pi[A](")[0] == 2
    assert run("eval", "--db", "/nonexistent.json", "--expr", "R")[0] == 2
    assert run("eval", "--expr", "R")[0] == 3


def test_resource_limit():
    code, _ = run("eval", "--db", str(DATA / "company.json"), "--expr", "subset(Company_Emp)",
                  "--max-worlds", "4")
    assert code == 4


def test_check_equiv_reports_limits_and_disagreement(tmp_path):
    args = ("check-equiv", "--so", str(DATA / "three_color.so"), "--db", str(DATA / "triangle.json"))
    code, text = run(*args)
    assert "model checking answer: true" in text
    assert "compiled with definitions: agree" in text
    assert code == 4
    code, text = run(*args, "--expr", "pi[]({1}) - pi[]({1})")
    assert code == 5 and "supplied query: disagree" in text


def test_repl():
    script = f":load {DATA / 'company.json'}\n:schema\n:mode possible\nrepairkey[]({{0}} U {{1}})\nbogus(\n:quit\n"
    code, text = run("repl", stdin=script)
    assert code == 0
    assert "loaded 2 relation(s)" in text
    assert "Company_Emp(C, E)" in text
    assert text.count("Result |") == 1
    assert "error:" in text


def test_acceptance_subcommand():
    code, text = run("acceptance", "1")
    assert code == 0 and text.startswith("[PASS]")
