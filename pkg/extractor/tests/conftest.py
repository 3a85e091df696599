import pytest
import torch

from gfextract.model import ToyCausalLM


@pytest.fixture(scope="session")
def toy_model():
    torch.manual_seed(7)
    model = ToyCausalLM(dim=8, hidden=16)
    model.double()
    model.eval()
    assert model.num_parameters() < 10**5
    return model


@pytest.fixture
def samples():
    from gfextract.extract import SampleRecord

    return [
        SampleRecord("what is 2+2?", "it is 4.", teacher_id="toy", temperature=0.6),
        SampleRecord("what is 2+2?", "four, clearly.", teacher_id="toy", temperature=0.6),
        SampleRecord("name a color", "blue is one.", teacher_id="toy", temperature=0.6),
        SampleRecord("name a color", "red works.", teacher_id="toy", temperature=0.6),
    ]
