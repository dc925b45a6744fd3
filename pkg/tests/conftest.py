import pytest

from helpers import sine, write_manifest_rows, write_wav


@pytest.fixture
def tiny_corpus(tmp_path):
    """Three tone clips with distinct labels, manifest + wavs on disk."""
    rate = 16000
    rows = []
    for i, (freq, label) in enumerate([(220, "breathy"), (440, "neutral"), (880, "pressed")]):
        wav = tmp_path / f"c{i}.wav"
        write_wav(wav, rate, sine(freq, 0.5, rate))
        rows.append(f"c{i},{wav.name},{label},A,C4")
    manifest = write_manifest_rows(tmp_path / "manifest.csv", rows)
    return manifest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" and report.passed:
        print(f"\n[acceptance] PASS {name}")
    elif report.when == "call" and report.failed:
        print(f"\n[acceptance] FAIL {name}")
    elif report.skipped:
        print(f"\n[acceptance] SKIP {name} ({report.longrepr[2] if report.longrepr else ''})")
