import html
import inspect

import pytest

pytest_plugins = ["robust_grasp_loss.pytest_plugin"]

REPORT_COLUMNS = (
    ("validation_category", "Validation Category"),
    ("validation_criterion", "Criterion"),
    ("validation_measured", "Measured"),
)


@pytest.hookimpl(optionalhook=True)
def pytest_html_report_title(report):
    report.title = "Robust Grasp Loss Validation Report"


def _marker_value(item: pytest.Item, marker_name: str) -> str:
    marker = item.get_closest_marker(marker_name)
    if marker is None or not marker.args:
        return ""
    return str(marker.args[0])


def _test_description(item: pytest.Item) -> str:
    test_object = getattr(item, "obj", None)
    if test_object is None:
        return ""
    return inspect.getdoc(test_object) or ""


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item: pytest.Item, call):
    outcome = yield
    report = outcome.get_result()

    if report.when != "call":
        return

    report.validation_category = _marker_value(item, "validation_category")
    report.validation_criterion = _marker_value(item, "validation_criterion")
    # set by the test through request.node.validation_summary
    report.validation_measured = getattr(item, "validation_summary", "") or ""

    description = _test_description(item)
    pytest_html = item.config.pluginmanager.getplugin("html")
    if pytest_html is None or not description:
        return
    escaped_description = html.escape(description).replace("\n", "<br>")
    extras = getattr(report, "extras", [])
    extras.append(
        pytest_html.extras.html(
            f"<div><strong>Validation description</strong><br>{escaped_description}</div>"
        )
    )
    report.extras = extras


@pytest.hookimpl(optionalhook=True)
def pytest_html_results_table_header(cells):
    for offset, (_, title) in enumerate(REPORT_COLUMNS):
        cells.insert(2 + offset, f"<th>{title}</th>")


@pytest.hookimpl(optionalhook=True)
def pytest_html_results_table_row(report, cells):
    for offset, (attribute, _) in enumerate(REPORT_COLUMNS):
        value = html.escape(str(getattr(report, attribute, "")))
        cells.insert(2 + offset, f"<td>{value}</td>")
