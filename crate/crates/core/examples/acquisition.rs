//! Mining type-level refiners from entity-bearing query suggestions.

use intentkb::acquisition::{aggregate_refiners, extract_refiner, select_types, top_entities, EntityRecord, SuggestionRecord};
use intentkb::kb::EntityType;

fn main() -> intentkb::Result<()> {
    let destination = EntityType::from_label("travel.travel_destination")?;
    let hotel = EntityType::from_label("lodging.hotel")?;
    let entity = |name: &str, ty: &EntityType, popularity| EntityRecord {
        entity_name: name.into(),
        entity_type: ty.clone(),
        popularity,
    };
    let entities = vec![
        entity("sydney", &destination, 9000),
        entity("paris", &destination, 12000),
        entity("kyoto", &destination, 4000),
        entity("hilton", &hotel, 5000),
        entity("motel one", &hotel, 800),
    ];

    // hotels have only one entity above the threshold
    let types = select_types(&entities, 3000, 2);
    let labels: Vec<String> = types.iter().map(|t| t.label()).collect();
    println!("selected types: {labels:?}");
    let top: Vec<String> = top_entities(&entities, &destination, 2).into_iter().map(|e| e.entity_name).collect();
    println!("top destinations: {top:?}");

    println!("refiner of 'hilton nyc': {:?}", extract_refiner("hilton", "hilton nyc"));

    let suggestions: Vec<SuggestionRecord> = [
        ("sydney", "sydney map"),
        ("paris", "paris map"),
        ("kyoto", "Kyoto  MAP"),
        ("sydney", "sydney weather"),
        ("paris", "paris weather"),
        ("kyoto", "kyoto temples"),
        ("sydney", "things to do in sydney"),
    ]
    .iter()
    .map(|(e, s)| SuggestionRecord::new(e, s))
    .collect();
    let (refiners, diag) = aggregate_refiners(&suggestions, &entities, 2);
    for r in &refiners {
        println!("[{}] {}\tsupport {}", r.entity_type.display(), r.refiner, r.support);
    }
    println!("{diag:?}");
    Ok(())
}
