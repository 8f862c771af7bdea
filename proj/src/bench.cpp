namespace lcde {}
