import pytest

from tensorpad.session import Session, SessionError, replay, run_script


def test_declaration_then_assignment_echo():
    s = Session()
    assert s.eval_line("{m,n,p,q#}::Indices(vector)", ".") == ""
    assert s.eval_line("C:= A A") == "C:= A A;"
    assert s.eval_line("X:= B_{m n}", ".") == ""  # '.' suppresses echo
    assert "X" in s.bindings


def test_substitution_flow_matches_published_output():
    s = Session()
    s.eval_line("{m,n,p,q#}::Indices(vector)", ".")
    s.eval_line("C:= A A")
    s.eval_line("@substitute!(%)( A = B_{m n} B_{m n} )")
    out = s.eval_line("@substitute!(%)( B_{n p} = T_{m n} T_{m p} )")
    assert out == ("C:= T_{q2 m} T_{q2 n} T_{q3 m} T_{q3 n} "
                   "T_{q4 p} T_{q4 q1} T_{q5 p} T_{q5 q1};")


def test_unknown_command_reports_and_preserves_state():
    s = Session()
    s.eval_line("C:= a b")
    before = dict(s.bindings)
    with pytest.raises(SessionError) as err:
        s.eval_line("@undefined_cmd!(%)")
    assert "unknown command" in str(err.value)
    assert s.bindings == before


def test_unimplemented_commands_are_distinct():
    s = Session()
    s.eval_line("C:= a b")
    with pytest.raises(SessionError) as err:
        s.eval_line("@join!(%)")
    assert "unimplemented" in str(err.value)


def test_collect_terms_command():
    s = Session()
    s.eval_line("X:= 1/2 a + 1/2 a")
    out = s.eval_line("@collect_terms!(%)")
    assert out == "X:= a;"


def test_percent_refers_to_latest_target():
    s = Session()
    s.eval_line("A:= x + x")
    s.eval_line("B:= y")
    out = s.eval_line("@collect_terms!(%)")
    assert out == "B:= y;"
    s.eval_line("@collect_terms!(A)")
    out = s.eval_line("@collect_terms!(%)")  # % now follows A
    assert out == "A:= 2 x;"


def test_splice_interpolation():
    s = Session()
    s.eval_line("W1:= a b")
    s.eval_line("W2:= c")
    out = s.eval_line("basis:= { @(W1), @(W2) }")
    assert out == "basis:= {a b, c};"


def test_splice_unknown_label_is_error():
    s = Session()
    with pytest.raises(SessionError):
        s.eval_line("X:= @(nope)")


def test_parse_error_keeps_state():
    s = Session()
    s.eval_line("C:= a")
    registry_before = s.registry
    with pytest.raises(SessionError):
        s.eval_line("D:= F_{m n")
    assert "D" not in s.bindings
    assert s.current_label == "C"
    assert s.registry is registry_before


def test_expression_literal_becomes_current():
    s = Session()
    s.eval_line("{m,n,p,q#}::Indices(vector)", ".")
    out = s.eval_line("T_{m n} T_{m n} + T_{p q1} T_{p q1}")
    assert out == "T_{m n} T_{m n} + T_{p q1} T_{p q1};"
    out = s.eval_line("@rename_dummies!(%)")
    out = s.eval_line("@collect_terms!(%)")
    assert out == "2 T_{m n} T_{m n};"


def test_default_post_rules_via_declaration():
    s = Session()
    s.eval_line("::PostDefaultRules(@@prodsort!(%), @@rename_dummies!(%), "
                "@@canonicalise!(%), @@collect_terms!(%))", ".")
    assert s.default_post_rules == ["prodsort", "rename_dummies",
                                    "canonicalise", "collect_terms"]
    s.eval_line("{m,n,p,q#}::Indices(vector)", ".")
    s.eval_line("X:= b a + T_{q1 q2} T_{q1 q2}")
    out = s.eval_line("@distribute!(%)")
    assert out == "X:= a b + T_{m n} T_{m n};"


def test_history_replay_reproduces_bindings():
    s = Session()
    for line, term in [("{m,n,p,q#}::Indices(vector)", "."),
                       ("C:= A A", ";"),
                       ("@substitute!(%)( A = B_{m n} B_{m n} )", ";")]:
        s.eval_line(line, term)
    from tensorpad.notation import print_tex
    fresh = replay([h[0] for h in s.history])
    assert {k: print_tex(v) for k, v in fresh.bindings.items()} == \
        {k: print_tex(v) for k, v in s.bindings.items()}


def test_bang_applies_until_fixpoint():
    s = Session()
    s.eval_line("X:= a")
    s.eval_line("@substitute!(%)( a -> b, b -> c )")
    # one @substitute! pass rewrites a->b; the next pass inside the same
    # command rewrites b->c; fixpoint at c
    assert s.eval_line("@collect_terms!(%)") == "X:= c;"


def test_run_script_transcript(tmp_path):
    script = tmp_path / "demo.tp"
    script.write_text("{m,n,p,q#}::Indices(vector).\n"
                      "C:= A A;\n"
                      "@substitute!(%)( A = B_{m n} B_{m n} );\n")
    status, transcript = run_script(str(script))
    assert status == 0
    assert transcript.splitlines() == [
        "C:= A A;",
        "C:= B_{m n} B_{m n} B_{p q1} B_{p q1};",
    ]


def test_run_script_empty(tmp_path):
    script = tmp_path / "empty.tp"
    script.write_text("")
    status, transcript = run_script(str(script))
    assert status == 0
    assert transcript == ""


def test_run_script_error_names_line(tmp_path):
    script = tmp_path / "bad.tp"
    script.write_text("C:= a;\nD:= b;\nE:= F_{m n;\n")
    status, transcript = run_script(str(script))
    assert status == 1
    assert "line 3" in transcript


def test_run_script_keep_going(tmp_path):
    script = tmp_path / "bad.tp"
    script.write_text("C:= 1/x;\nD:= b;\n")
    status, transcript = run_script(str(script), keep_going=True)
    assert status == 1
    assert "D:= b;" in transcript


def test_properties_listing_command():
    s = Session()
    s.eval_line("{ \\epsilon, \\lambda }::AntiCommuting", ".")
    s.eval_line("\\lambda::SelfAntiCommuting", ".")
    out = s.eval_line("@properties(\\lambda)")
    assert "AntiCommuting" in out
    assert "SelfAntiCommuting" in out
    out = s.eval_line("@properties(x)")
    assert "no properties" in out


def test_comment_lines_are_skipped():
    from tensorpad.notation import split_source
    pieces = split_source("%% a note\nC:= a;\n%% another\nD:= b;")
    assert [p[0] for p in pieces] == ["C:= a", "D:= b"]
