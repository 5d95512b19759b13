import pytest

from bnforge import Engine, load_bundled, parse_term

PEDIGREE_FACTS = (
    "(child C A B)",
    "(child D B F)",
    "(child E C D)",
    "(observed-phenotype E present)",
)

_acceptance = {}


def record_acceptance(number: int, title: str, passed: bool, detail: str = "") -> None:
    _acceptance[number] = (title, passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_acceptance):
        title, passed, detail = _acceptance[n]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {n}. {title}{' :: ' + detail if detail else ''}")


def pedigree_engine(allele_p=None, facts=PEDIGREE_FACTS) -> Engine:
    e = Engine()
    e.load(load_bundled("genetics"))
    if allele_p is not None:
        e.set_param("allele-p", allele_p)
    for f in facts:
        e.assert_fact(parse_term(f))
    return e


@pytest.fixture
def pedigree():
    return pedigree_engine()
