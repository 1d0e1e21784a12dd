from wire_contract import check_embed_service, check_health, embed

from mercator.stub_server import run_stub_server


class TestStubServerContract:
    def test_full_contract_battery(self):
        with run_stub_server(dim=32) as url:
            check_embed_service(url)

    def test_health_reports_model_name(self):
        with run_stub_server(dim=8) as url:
            payload = check_health(url)
        assert payload["model"] == "hashed-bag-stub"

    def test_reported_dim_matches_configuration(self):
        with run_stub_server(dim=48) as url:
            payload = embed(url, ["one", "two"])
        assert payload["dim"] == 48
