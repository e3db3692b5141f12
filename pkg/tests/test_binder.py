import copy

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expected_ast import WEATHER_LOCATION
from httpdsl import parse_document, samples
from httpdsl.binder import (
    BindingSet, InvalidResolvedValue, MissingEnvironment, MissingInput,
    collect_environment_variables, collect_input_variables, resolve,
)
from httpdsl.model import EntityKind, ReturnForm
from httpdsl.url import HostKind, render_url


def env_of(mapping):
    return mapping.get


def one(text):
    return parse_document(text).messages[0]


def test_weather_location_inputs():
    assert collect_input_variables(WEATHER_LOCATION) == ["apiKeyParam", "city"]
    assert collect_environment_variables(WEATHER_LOCATION) == []


def test_rest_get_template_variables():
    get = parse_document(samples.source("rest")).message("GetRequest")
    assert collect_input_variables(get) == [
        "url", "path", "paramKey", "paramValue", "headerKey", "headerValue"]


def test_no_variables():
    m = one('http { name A url server "x.com" type GET }')
    assert collect_input_variables(m) == []
    assert collect_environment_variables(m) == []


def test_environment_variables_deduplicated_in_order():
    m = one('http { name A url server environment SERVER_URL type GET '
            'param "a": environment TOKEN param "b": environment SERVER_URL '
            'header "X": input $x param "c": input $x }')
    assert collect_environment_variables(m) == ["SERVER_URL", "TOKEN"]
    assert collect_input_variables(m) == ["x"]


def test_resolve_weather_location():
    r = resolve(WEATHER_LOCATION, BindingSet({"apiKeyParam": "K", "city": "Berlin"}))
    assert render_url(r.server, r.path, r.query) == (
        "http://www.dataservice.accuweather.com/locations/v1/cities/search"
        "?apikey=K&q=Berlin&language=en-US")
    assert r.effective_timeout_ms == 5000
    assert r.return_form is ReturnForm.PAYLOAD_TEXT
    assert r.expected_type == "text/plain"


def test_missing_input_names_the_variable():
    with pytest.raises(MissingInput) as info:
        resolve(WEATHER_LOCATION, BindingSet({"apiKeyParam": "K"}))
    assert info.value.name == "city"
    assert "city" in str(info.value)


def test_environment_server():
    m = one("http { name A url server environment SERVER_URL path users type GET }")
    r = resolve(m, BindingSet({}, env_of({"SERVER_URL": "http://localhost:8080"})))
    assert (r.server.host, r.server.port, r.server.host_kind) == (
        "localhost", 8080, HostKind.NAME)
    with pytest.raises(MissingEnvironment) as info:
        resolve(m, BindingSet())
    assert info.value.name == "SERVER_URL"


def test_first_missing_variable_in_traversal_order():
    m = parse_document(samples.source("rest")).message("PostRequest")
    with pytest.raises(MissingInput) as info:
        resolve(m, BindingSet({"url": "x.com"}))
    assert info.value.name == "path"


def test_extra_bindings_ignored():
    r = resolve(WEATHER_LOCATION, BindingSet({"apiKeyParam": "K", "city": "B", "x": "y"}))
    assert r.query[1] == ("q", "B")


@pytest.mark.parametrize("text,bindings,field", [
    ("http { name A url server input $s type GET }", {"s": "http://exa mple.com"},
     "url.server"),
    ('http { name A url server "x.com" path input $p type GET }', {"p": "a b"}, "url.path"),
    ('http { name A url server "x.com" type GET header input $h: "v" }', {"h": "X Y"},
     "header"),
    ('http { name A url server "x.com" type GET header "X": input $v }', {"v": "a\r\nb"},
     "X"),
    ('http { name A url server "x.com" type POST body { contentType input $ct '
     'entityType TEXT payload "p" } }', {"ct": "not a type"}, "body.contentType"),
    ('http { name A url server "x.com" type GET returns { expect input $ct as payload } }',
     {"ct": "json"}, "returns.expect"),
    ('http { name A url server "x.com" type GET customize { proxy host "p" '
     'port input $port } }', {"port": "99999"}, "proxy.port"),
    ('http { name A url server "x.com" type GET customize { proxy host input $h '
     'port "80" } }', {"h": ""}, "proxy.host"),
    ('http { name A url server "x.com" type GET header input $h: "v" customize '
     '{ basicauth user "u" password "p" } }', {"h": "authorization"}, "Authorization"),
    ('http { name A url server "x.com" type POST header input $h: "v" body '
     '{ contentType text/plain entityType TEXT payload "p" } }', {"h": "Content-Type"},
     "Content-Type"),
])
def test_invalid_resolved_values(text, bindings, field):
    with pytest.raises(InvalidResolvedValue) as info:
        resolve(one(text), BindingSet(bindings))
    assert info.value.field == field


def test_timeout_precedence():
    plain = one('http { name A url server "x.com" type GET }')
    custom = one('http { name A url server "x.com" type GET customize { timeout 750 } }')
    assert resolve(plain, BindingSet()).effective_timeout_ms == 5000
    assert resolve(plain, BindingSet(), default_timeout_ms=1200).effective_timeout_ms == 1200
    assert resolve(custom, BindingSet(), default_timeout_ms=1200).effective_timeout_ms == 750


def test_full_example_resolves():
    m = parse_document(samples.source("full_example")).messages[0]
    env = {"SERVER_URL": "https://reports.example.com", "PROXY_HOST": "proxy.local",
           "API_USER": "u", "API_PASSWORD": "p"}
    r = resolve(m, BindingSet({"user": "ann", "report": "{}"}, env_of(env)))
    assert r.proxy == ("proxy.local", 3128)
    assert r.basic_auth == ("u", "p")
    assert r.body.entity_type is EntityKind.TEXT
    assert r.body.content_type == "application/json"
    assert r.effective_timeout_ms == 10000


def test_resolve_does_not_mutate_message():
    before = copy.deepcopy(WEATHER_LOCATION)
    resolve(WEATHER_LOCATION, BindingSet({"apiKeyParam": "K", "city": "B"}))
    assert WEATHER_LOCATION == before


# fixture messages with a valid value for every variable they use
FIXTURES = {
    "weather_location": {"apiKeyParam": "K", "city": "Berlin"},
    "rest": {"url": "http://localhost:8080", "path": "items", "paramKey": "k",
             "paramValue": "v", "headerKey": "X-Key", "headerValue": "v", "payload": "{}"},
    "full_example": {"user": "ann", "report": "{}", "SERVER_URL": "http://h.example.com",
                     "PROXY_HOST": "proxy.local", "API_USER": "u", "API_PASSWORD": "p"},
}
FIXTURE_MESSAGES = [(name, m) for name in FIXTURES
                    for m in parse_document(samples.source(name)).messages]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(FIXTURE_MESSAGES), st.data())
def test_resolve_succeeds_iff_all_variables_bound(case, data):
    name, message = case
    good = FIXTURES[name]
    inputs = collect_input_variables(message)
    envs = collect_environment_variables(message)
    keep_inputs = data.draw(st.sets(st.sampled_from(inputs))) if inputs else set()
    keep_envs = data.draw(st.sets(st.sampled_from(envs))) if envs else set()
    bindings = BindingSet({k: good[k] for k in keep_inputs},
                          env_of({k: good[k] for k in keep_envs}))
    complete = keep_inputs == set(inputs) and keep_envs == set(envs)
    try:
        resolve(message, bindings)
        ok = True
    except (MissingInput, MissingEnvironment):
        ok = False
    assert ok is complete
