import pytest

from foiwatch.errors import UnknownLabelError
from foiwatch.taxonomy import (BULLDOZER, CEMENT_PUMP, DUST_PROOF_NET, EXCAVATOR, FINE_CLASSES, GREENHOUSE_FILM,
                               METAL_ROOF_SHEET, PRESETS, aggregate_label, get_taxonomy)


def test_functional_grouping():
    taxonomy = get_taxonomy()
    assert taxonomy.name == 'functional'
    assert aggregate_label(taxonomy, GREENHOUSE_FILM) == 'non-rigid'
    assert aggregate_label(taxonomy, EXCAVATOR) == 'construction machinery'
    assert aggregate_label(taxonomy, METAL_ROOF_SHEET) == 'rigid'


def test_other_presets():
    assert aggregate_label(get_taxonomy('material'), DUST_PROOF_NET) == 'mesh'
    assert aggregate_label(get_taxonomy('material'), BULLDOZER) == 'metal'
    assert aggregate_label(get_taxonomy('height'), CEMENT_PUMP) == 'high'
    assert aggregate_label(get_taxonomy('height'), GREENHOUSE_FILM) == 'ground-contact'


@pytest.mark.parametrize('name', sorted(PRESETS))
def test_presets_are_total_with_three_aggregates(name):
    taxonomy = get_taxonomy(name)
    assert set(taxonomy.mapping) == set(FINE_CLASSES)
    assert len(taxonomy.aggregates) == 3


def test_unmapped_labels():
    with pytest.raises(UnknownLabelError):
        aggregate_label(get_taxonomy(), 'solar panel')
    assert aggregate_label(get_taxonomy(unknown_bucket='other'), 'solar panel') == 'other'
    # presets are not modified by the bucket
    assert get_taxonomy().unknown_bucket is None


def test_unknown_taxonomy_name():
    with pytest.raises(UnknownLabelError):
        get_taxonomy('colour')
