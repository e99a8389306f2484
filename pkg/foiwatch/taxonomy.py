"""Fine FOI classes and the three aggregation schemes"""
from foiwatch.errors import UnknownLabelError
from foiwatch.models.reference import ClassTaxonomy

GREENHOUSE_FILM = 'greenhouse film'
DUST_PROOF_NET = 'dust-proof net'
WIND_BLOWN_BANNER = 'wind-blown banner'
METAL_ROOF_SHEET = 'metal roof sheet'
TOWER_CRANE = 'tower crane'
CRANE_VEHICLE = 'crane vehicle'
CEMENT_MIXER = 'cement mixer'
EXCAVATOR = 'excavator'
CEMENT_PUMP = 'cement pump'
BULLDOZER = 'bulldozer'

FINE_CLASSES = (
    GREENHOUSE_FILM, DUST_PROOF_NET, WIND_BLOWN_BANNER, METAL_ROOF_SHEET, TOWER_CRANE,
    CRANE_VEHICLE, CEMENT_MIXER, EXCAVATOR, CEMENT_PUMP, BULLDOZER,
)

CONSTRUCTION_MACHINES = (TOWER_CRANE, CRANE_VEHICLE, CEMENT_MIXER, EXCAVATOR, BULLDOZER, CEMENT_PUMP)


def _build(name: str, groups: dict[str, tuple[str, ...]]) -> ClassTaxonomy:
    mapping = {fine: aggregate for aggregate, members in groups.items() for fine in members}
    return ClassTaxonomy(name=name, mapping=mapping)


# Grouping by functional behavior scored best, so it is the default
FUNCTIONAL = _build('functional', {
    'non-rigid': (GREENHOUSE_FILM, DUST_PROOF_NET, WIND_BLOWN_BANNER),
    'construction machinery': CONSTRUCTION_MACHINES,
    'rigid': (METAL_ROOF_SHEET,),
})

MATERIAL = _build('material', {
    'metal': CONSTRUCTION_MACHINES + (METAL_ROOF_SHEET,),
    'mesh': (DUST_PROOF_NET,),
    'plastic': (WIND_BLOWN_BANNER, GREENHOUSE_FILM),
})

HEIGHT = _build('height', {
    'high': (TOWER_CRANE, CEMENT_PUMP, CRANE_VEHICLE),
    'medium': (EXCAVATOR, CEMENT_MIXER, BULLDOZER, METAL_ROOF_SHEET),
    'ground-contact': (DUST_PROOF_NET, GREENHOUSE_FILM, WIND_BLOWN_BANNER),
})

PRESETS = {t.name: t for t in (FUNCTIONAL, MATERIAL, HEIGHT)}


def get_taxonomy(name: str = 'functional', unknown_bucket: str = None) -> ClassTaxonomy:
    if name not in PRESETS:
        raise UnknownLabelError(f"unknown taxonomy '{name}', expected one of: {', '.join(PRESETS)}")
    taxonomy = PRESETS[name]
    if unknown_bucket:
        taxonomy = taxonomy.model_copy(update={'unknown_bucket': unknown_bucket})
    return taxonomy


def aggregate_label(taxonomy: ClassTaxonomy, fine: str) -> str:
    aggregate = taxonomy.mapping.get(fine)
    if aggregate is not None:
        return aggregate
    if taxonomy.unknown_bucket is not None:
        return taxonomy.unknown_bucket
    raise UnknownLabelError(f"label '{fine}' is not mapped by taxonomy '{taxonomy.name}'")
